#include "reseq/json_util.hpp"

#include <cmath>
#include <cstdio>

namespace reseq {
namespace {

using nlohmann::ordered_json;

void write(const ordered_json& v, int indent, int depth, std::string& out) {
    auto newline = [&](int d) {
        if (indent < 0) return;
        out.push_back('\n');
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (v.type()) {
        case ordered_json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out.push_back('{');
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                newline(depth + 1);
                out += ordered_json(it.key()).dump();
                out += indent < 0 ? ":" : ": ";
                write(it.value(), indent, depth + 1, out);
            }
            newline(depth);
            out.push_back('}');
            return;
        }
        case ordered_json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out.push_back('[');
            bool first = true;
            for (const auto& item : v) {
                if (!first) out.push_back(',');
                first = false;
                newline(depth + 1);
                write(item, indent, depth + 1, out);
            }
            newline(depth);
            out.push_back(']');
            return;
        }
        case ordered_json::value_t::number_float: {
            const double d = v.get<double>();
            if (!std::isfinite(d)) {
                out += "null";
                return;
            }
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", d);
            out += buf;
            return;
        }
        default:
            out += v.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& value, int indent) {
    std::string out;
    write(value, indent, 0, out);
    out.push_back('\n');
    return out;
}

}  // namespace reseq

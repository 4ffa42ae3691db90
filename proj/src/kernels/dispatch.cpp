#include <atomic>
#include <cstdlib>
#include <string_view>

#include "reseq/kernels.hpp"

namespace reseq::kernels {
namespace {

const KernelTable* select_default() {
    if (const char* forced = std::getenv("RESEQ_KERNELS")) {
        const std::string_view want(forced);
        for (const KernelTable* t : available_tables()) {
            if (want == t->name) return t;
        }
        return &scalar_table();
    }
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*> g_override{nullptr};

}  // namespace

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> out{&scalar_table()};
    if (const KernelTable* t = avx2_table()) out.push_back(t);
    if (const KernelTable* t = neon_table()) out.push_back(t);
    return out;
}

const KernelTable& active() {
    if (const KernelTable* t = g_override.load(std::memory_order_acquire)) return *t;
    static const KernelTable* const chosen = select_default();
    return *chosen;
}

void set_active(const KernelTable* table) { g_override.store(table, std::memory_order_release); }

}  // namespace reseq::kernels

// Copyright 2026 The listrank Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runtime kernel selection. The table is resolved once and then stays fixed,
// so a given machine runs the same code path for the life of the process and
// reruns stay deterministic.

#include "listrank/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace listrank::kernels {

// Defined in kernels_avx2.cpp; nullptr when the TU was built without AVX2.
const Ops* avx2_ops_build();

namespace {

std::atomic<const Ops*> g_active{nullptr};

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* resolve(Backend requested) {
    const Ops* avx2 = avx2_ops_build();
    const bool avx2_ok = avx2 != nullptr && cpu_has_avx2_fma();
    switch (requested) {
        case Backend::kScalar:
            return &scalar_ops();
        case Backend::kAvx2:
            return avx2_ok ? avx2 : &scalar_ops();
        case Backend::kAuto:
            break;
    }
    if (const char* env = std::getenv("LISTRANK_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
        if (std::strcmp(env, "avx2") == 0) return avx2_ok ? avx2 : &scalar_ops();
        // Unknown value falls through to auto detection.
    }
    return avx2_ok ? avx2 : &scalar_ops();
}

}  // namespace

const Ops& active() {
    const Ops* o = g_active.load(std::memory_order_acquire);
    if (o == nullptr) {
        o = resolve(Backend::kAuto);
        g_active.store(o, std::memory_order_release);
    }
    return *o;
}

const char* active_name() { return active().name; }

const Ops* avx2_ops() {
    const Ops* avx2 = avx2_ops_build();
    return (avx2 != nullptr && cpu_has_avx2_fma()) ? avx2 : nullptr;
}

void force_backend(Backend b) {
    g_active.store(b == Backend::kAuto ? nullptr : resolve(b), std::memory_order_release);
}

}  // namespace listrank::kernels

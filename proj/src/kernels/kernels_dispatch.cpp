#include <cstdlib>
#include <stdexcept>
#include <string>

#include "sepca/kernels.hpp"

namespace sepca::kernels {

bool avx2_supported() {
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Ops& select_ops(std::string_view request) {
    std::string req(request);
    if (req.empty() || req == "auto") {
        const char* env = std::getenv("SEPCA_KERNEL");
        req = (env != nullptr && *env != '\0') ? env : "auto";
    }
    if (req == "scalar") return scalar_ops();
    if (req == "avx2") {
#if defined(__x86_64__)
        if (avx2_supported()) return avx2_ops();
        throw std::invalid_argument("kernel backend 'avx2' not supported by this CPU");
#else
        throw std::invalid_argument("kernel backend 'avx2' not available on this architecture");
#endif
    }
    if (req == "auto") {
#if defined(__x86_64__)
        if (avx2_supported()) return avx2_ops();
#endif
        return scalar_ops();
    }
    throw std::invalid_argument("unknown kernel backend '" + req + "' (expected auto, scalar or avx2)");
}

std::string available_backends() {
    std::string s = "scalar";
    if (avx2_supported()) s += ",avx2";
    return s;
}

} // namespace sepca::kernels

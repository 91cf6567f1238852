#include "asvmc/errors.hpp"
#include "asvmc/simulate.hpp"
#include "engine.hpp"

namespace asvmc {

namespace detail {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

}  // namespace detail

bool avx2_available() {
#ifdef ASVMC_BUILD_AVX2
    return detail::cpu_has_avx2();
#else
    return false;
#endif
}

Kernel resolve_kernel(Kernel requested) {
    switch (requested) {
        case Kernel::Auto:
            return avx2_available() ? Kernel::Avx2 : Kernel::Scalar;
        case Kernel::Scalar:
            return Kernel::Scalar;
        case Kernel::Avx2:
            if (!avx2_available())
                throw InvalidParameterError(
                    "avx2 kernel requested but not available on this build/CPU");
            return Kernel::Avx2;
    }
    throw InvalidParameterError("unknown kernel");
}

const char* kernel_name(Kernel k) {
    switch (k) {
        case Kernel::Auto:
            return "auto";
        case Kernel::Scalar:
            return "scalar";
        case Kernel::Avx2:
            return "avx2";
    }
    return "unknown";
}

}  // namespace asvmc

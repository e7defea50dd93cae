#pragma once

#include "chafee/simd.hpp"

namespace chafee::simd::detail {

extern const KernelTable kScalarTable;
#if defined(CHAFEE_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace chafee::simd::detail

// Copyright 2026 the unite-desk authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "unite/kernels.hpp"

namespace unite::kernels {

namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy};
#if defined(UNITE_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy};
#endif

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(UNITE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (const char* forced = std::getenv("UNITE_KERNELS"); forced && std::string(forced) == "scalar") {
    return Isa::Scalar;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported on this machine: " + std::string(isa_name(isa)));
  }
#if defined(UNITE_HAVE_AVX2)
  if (isa == Isa::Avx2) return kAvx2Table;
#endif
  return kScalarTable;
}

namespace detail {
const KernelTable* active_table = &table_for(detect_isa());
}

Isa active_isa() {
  return detail::active_table == &kScalarTable ? Isa::Scalar : Isa::Avx2;
}

void select_isa(Isa isa) { detail::active_table = &table_for(isa); }

}  // namespace unite::kernels

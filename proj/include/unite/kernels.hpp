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

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace unite::kernels {

// Instruction sets with a kernel implementation. Scalar is the reference;
// every other variant must agree with it to within rounding.
enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

// Double-precision primitives used by the encoder's inner loops.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

bool isa_supported(Isa isa);

// Best supported ISA, unless UNITE_KERNELS=scalar is set in the environment.
Isa detect_isa();

Isa active_isa();

// Switches the process-wide kernel table. Throws if the ISA is unsupported.
// Not synchronized: call before any concurrent use of the kernels.
void select_isa(Isa isa);

const KernelTable& table_for(Isa isa);

namespace detail {
extern const KernelTable* active_table;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return detail::active_table->dot(a.data(), b.data(), a.size());
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::active_table->axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace unite::kernels

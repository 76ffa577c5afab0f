#pragma once

// Canned benchmark suites. Output is CSV, one row per
// (query, method, l, n, k):
//   query,method,l,n,k,tt_k,delay_mean,delay_max_window,mem_peak,graph_size,status

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace thetarank {

// "smoke" (seconds), "scaling" (QS1 n = 2^10..2^16) or "methods" (TLFG
// methods side by side). Throws InvalidArgument for other names.
void run_bench(const std::string& suite, std::uint64_t seed, std::ostream& out);

std::vector<std::string> bench_suites();

}  // namespace thetarank

#pragma once

#include <abd/core.hpp>

#include <string>
#include <vector>

namespace abd::detail {

inline int resolve_count(int count, int n, const char* what) {
  if (count == 0) return n;
  if (count < 1 || count > n)
    throw ValidationError(std::string(what) + ": invariant count must lie in 1.." +
                          std::to_string(n));
  return count;
}

inline std::vector<double> power_traces(const Mat& x, int count) {
  std::vector<double> out;
  out.reserve(count);
  Mat p = Mat::Identity(x.rows(), x.cols());
  for (int a = 1; a <= count; ++a) {
    p = p * x;
    out.push_back(p.trace());
  }
  return out;
}

}  // namespace abd::detail

#include <algorithm>
#include <cstdio>
#include <exception>

#include "geflow/verify.hpp"

using namespace geflow;

int main() {
  std::vector<Check> all;
  try {
    VerifyConfig cfg;
    for (const auto& s : suite_names())
      for (auto& c : run_suite(s, cfg)) all.push_back(std::move(c));
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::sort(all.begin(), all.end(), [](const Check& a, const Check& b) { return a.id < b.id; });
  int failed = 0;
  for (const auto& c : all) {
    std::printf("%s\n", format_check(c).c_str());
    failed += !c.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}

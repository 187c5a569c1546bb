#include <iostream>

#include "acceptance.hpp"

int main() {
  const auto results = ruelle::acceptance::run_all(std::cout);
  return ruelle::acceptance::all_pass(results) ? 0 : 1;
}

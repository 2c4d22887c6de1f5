#include <dbflow/flow.hpp>
#include <dbflow/models.hpp>
#include <iostream>
int main() {
  const auto h = dbf::Hermitian::check(dbf::build_tfim(3, 1.0).to_operator());
  const auto t = dbf::run_flow(h, dbf::FlowPolicy::canonical(), 3, {});
  std::cout << t.offdiag_norms.back() << "\n";
}

// Analyze a small switched system, print the verdicts and check the report independently.
//
//   ./quickstart                 # built-in consensus family
//   ./quickstart family.json     # any family file

#include <fstream>
#include <iostream>
#include <sstream>

#include "linconv/linconv.hpp"

int main(int argc, char** argv) {
  using namespace linconv;
  try {
    MatrixFamily f = catalogue("path-consensus").family;
    if (argc > 1) {
      std::ifstream is(argv[1]);
      if (!is) throw InputError(std::string("cannot open ") + argv[1]);
      std::stringstream ss;
      ss << is.rdbuf();
      f = parse_family(ss.str());
    }

    const AnalysisReport r = analyze(f);
    std::cout << "strong: " << to_string(r.strong.status) << " (" << r.strong.method << ")\n";
    std::cout << "weak:   " << to_string(r.weak.status) << " (" << r.weak.method << ")\n";
    if (r.rate) std::cout << "rate:   beta = " << r.rate->beta << "\n";

    const Json report = to_json(r, f);
    const VerifyResult v = verify_report(report, f);
    std::cout << "verify: " << (v.pass ? "pass" : "fail") << " (" << v.checked.size() << " checks)\n";

    // One trajectory under random switching.
    const Vector x0 = Vector::Ones(f.dim());
    const Trajectory tr = f.mode() == Mode::CT
                              ? simulate_ct(f, SwitchingSignal::random_vertex(1, 0.5), x0, 20.0, 0.5)
                              : simulate_dt(f, SwitchingSignal::random_vertex(1, 1.0), x0, 200);
    std::cout << "x(end): " << tr.states.back().transpose() << (tr.converged ? " (settled)" : "") << "\n";
    return v.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

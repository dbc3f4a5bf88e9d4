// Free particle with time-dependent mass m(t) = 1 + t: integrate from a point on the
// leaf S_lambda, compare with the closed-form orbit, and print both conserved quantities.

#include <cstdio>
#include <vector>

#include "cocontact/cocontact.hpp"

int main() {
    using namespace cocontact;
    const SystemSpec sys = build_system("free_particle_tm");
    const std::vector<double> lambda{1.0, 0.0};
    const PhasePoint x0 = sys.orbit(0.0, lambda, 1.0);

    IntegratorSettings settings;
    settings.scheme = Scheme::rk45;
    const Trajectory tr = integrate(sys.H, x0, 2.0, settings);

    const auto& f1 = sys.quantity("f1").field;
    const auto& f2 = sys.quantity("f2").field;
    std::printf("%6s %14s %14s %14s %14s\n", "t", "q", "|q - exact|", "f1", "f2");
    for (double t = 0.0; t <= 2.0 + 1e-12; t += 0.25) {
        const PhasePoint x = tr.at(t);
        const PhasePoint e = sys.orbit(t, lambda, 1.0);
        std::printf("%6.2f %14.10f %14.3e %14.10f %14.10f\n", t, x.q[0], max_abs_difference(x, e), f1.value(x),
                    f2.value(x));
    }
    std::printf("Herglotz action over [0, 2]: %.12f (z(2) - z(0) = %.12f)\n", herglotz_action(sys.H, tr),
                tr.samples.back().z - x0.z);
    return 0;
}

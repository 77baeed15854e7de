// Reconstructs a small cylinder with both variants and prints the error
// curves side by side.

#include <cstdio>

#include "ccsi/config.hpp"

int main()
{
    using namespace ccsi;
    RunConfig rc;
    rc.measurement.source_angles_deg = {0, 45, 90, 135, 180, 225, 270, 315};
    rc.measurement.frequencies_hz = {2.0e8, 3.0e8};
    rc.measurement.radius_m = 1.5;
    rc.inversion_dx_m = 0.05;
    rc.synthesis_dx_m = 0.025;
    rc.domain_half_width_m = 0.5;
    rc.grid_half_width_m = 1.8;
    rc.phantom.shape = "cylinder";
    rc.phantom.center_x_m = 0.1;
    rc.phantom.radius_m = 0.2;
    rc.phantom.delta_eps = 1.0;
    rc.phantom.delta_sigma = 4e-3;
    rc.validate();

    const Subdomain fine = synthesis_domain(rc);
    SynthesisOptions so;
    so.inversion_cell = rc.inversion_dx_m;
    const auto ms = add_noise(synthesize(rc.measurement, build_phantom(rc, fine), fine, so), 40.0, 1);

    const Subdomain domain = inversion_domain(rc);
    auto inc = make_table<CVector>(rc.measurement.sources(), rc.measurement.frequencies());
    for (std::size_t p = 0; p < rc.measurement.sources(); ++p)
        for (std::size_t i = 0; i < rc.measurement.frequencies(); ++i)
            inc[p][i] = domain.restrict_field(
                incident_field_line_source(domain.grid(), rc.measurement.source_position(p), rc.measurement.omega(i)));
    const auto prob = make_problem(rc.measurement, domain, ms.scattered, inc);

    RunOptions opts;
    opts.max_iterations = 64;
    opts.truth = build_phantom(rc, domain);
    opts.variant = Variant::cc;
    const auto cc = run(prob, opts);
    opts.variant = Variant::plain;
    const auto plain = run(prob, opts);

    std::printf("%9s %12s %12s\n", "iteration", "err cc", "err plain");
    for (std::size_t k = 0; k < cc.log.size(); k += 8)
        std::printf("%9d %12.5f %12.5f\n", cc.log[k].iteration, cc.log[k].err, plain.log[k].err);
    return 0;
}

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stakit/fock.hpp"
#include "stakit/propagator.hpp"

using namespace stakit;

namespace {

StateVector basis(Eigen::Index n, Eigen::Index k) {
    StateVector v = StateVector::Zero(n);
    v(k) = 1.0;
    return v;
}

MatrixSchedule fig1_schedule(const AngleDesign& d) {
    return MatrixSchedule::two_level([d](double t) { return hamiltonian_matrix(controls_at(d, t)); });
}

MatrixSchedule invariant_schedule(const AngleDesign& d) {
    return MatrixSchedule::two_level([d](double t) { return invariant_matrix(d, t); });
}

}  // namespace

TEST(Propagate, RabiFlop) {
    const double omega = 3.0;
    const auto h = MatrixSchedule::two_level([=](double) { return hamiltonian_matrix({0.0, omega, 0.0}); });
    const TimeGrid g(kPi / omega, 65);
    const auto rec = propagate(h, basis(2, 1), g);
    const auto pop = populations(rec);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = std::sin(omega * g[i] / 2);
        EXPECT_NEAR(pop[i].P2, s * s, 1e-10) << "t=" << g[i];
    }
    EXPECT_NEAR(pop.back().P2, 1.0, 1e-10);
}

TEST(Propagate, DiagonalPhase) {
    const double delta = 1.7;
    const auto h = MatrixSchedule::two_level([=](double) { return hamiltonian_matrix({delta, 0.0, 0.0}); });
    StateVector psi(2);
    psi << std::sqrt(0.5), std::sqrt(0.5);
    const auto rec = propagate(h, psi, TimeGrid(2.0, 9));
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
        const cplx ratio = rec.states[i](1) / rec.states[i](0);
        EXPECT_NEAR(std::abs(ratio - std::exp(cplx{0.0, delta * rec.grid[i]})), 0.0, 1e-10);
        EXPECT_NEAR(std::norm(rec.states[i](0)), 0.5, 1e-9);  // norm contract is 10 rel_tol
    }
}

TEST(Propagate, FockStationaryStatePhase) {
    const QuadraticSchedule h([](double) { return oscillator_form(1.0); }, 16, 1.0);
    const double t = 2.5;
    const auto rec = propagate(h, basis(16, 3), TimeGrid(t, 3));
    const StateVector& end = rec.states.back();
    EXPECT_NEAR(std::abs(end(3) - std::exp(cplx{0.0, -3.5 * t})), 0.0, 1e-9);
    EXPECT_NEAR(end.norm(), 1.0, 1e-9);
}

TEST(Propagate, QuadraticScheduleApplyMatchesMatrix) {
    const auto d = make_ermakov_design(1.0, 0.1, 2.0);
    const QuadraticSchedule h([d](double t) { return hamiltonian_form(d, t); }, 24, 1.0);
    StateVector x = StateVector::Zero(24), y;
    for (Eigen::Index k = 0; k < 24; ++k) x(k) = cplx{std::cos(0.3 * k), std::sin(0.7 * k)};
    h.apply(0.8, x, y);
    EXPECT_LE((y - h.matrix(0.8) * x).norm(), 1e-13 * y.norm());
}

TEST(Populations, Examples) {
    const auto h = MatrixSchedule::two_level([](double) { return hamiltonian_matrix({1.0, 0.0, 0.0}); });
    StateVector psi(2);
    psi << std::sqrt(0.5), std::sqrt(0.5);
    const auto rec = propagate(h, psi, TimeGrid(1.0, 3));
    for (const auto& p : populations(rec)) {
        EXPECT_NEAR(p.P1, 0.5, 1e-9);
        EXPECT_NEAR(p.P2, 0.5, 1e-9);
    }
    const auto general = populations(rec, {1, 0});
    EXPECT_NEAR(general.back()[0], 0.5, 1e-9);
}

TEST(AdiabaticReference, DetuningOnlyFollowsUpperLevel) {
    const TimeGrid g(1.0, 5);
    const TLSControls c{SampledScalar(g, std::vector<double>(5, 2.0)), SampledScalar(g, std::vector<double>(5, 0.0)),
                        SampledScalar(g, std::vector<double>(5, 0.0))};
    for (const auto& p : adiabatic_reference(c)) {
        EXPECT_NEAR(p.P2, 1.0, 1e-15);
        EXPECT_NEAR(p.P1, 0.0, 1e-15);
    }
    for (const auto& p : adiabatic_reference(c, Branch::minus)) EXPECT_NEAR(p.P1, 1.0, 1e-15);
}

TEST(ModeTransport, StationaryModeAccumulatesDynamicalPhase) {
    const ControlPoint cp{0.6, 1.1, 0.4};
    const auto h = MatrixSchedule::two_level([=](double) { return hamiltonian_matrix(cp); });
    const auto eig = instantaneous_eigensystem(cp);
    const auto rec = propagate(h, eig.n_plus, TimeGrid(4.0, 41));
    const auto ov = mode_transport_check(rec, [&](std::size_t, double) { return StateVector(eig.n_plus); });
    EXPECT_EQ(ov.front().phase, 0.0);
    for (std::size_t i = 0; i < ov.size(); ++i) {
        EXPECT_NEAR(ov[i].modulus, 1.0, 1e-10);
        EXPECT_NEAR(ov[i].phase, -eig.E_plus * rec.grid[i], 1e-9);  // unwrapped past pi
    }
}

TEST(ModeTransport, Fig1FollowsInvariantMode) {
    const auto d = preset_fig1(1.0);
    const TimeGrid g(1.0, 257);
    const auto rec = propagate(fig1_schedule(d), invariant_mode(d, 0.0), g);
    const auto ov = mode_transport_check(rec, [&](std::size_t, double t) { return StateVector(invariant_mode(d, t)); });
    for (const auto& o : ov) EXPECT_GE(o.modulus * o.modulus, 1.0 - 1e-8);
}

TEST(InvarianceResidual, StaticIsZero) {
    const auto h = MatrixSchedule::two_level([](double) { return hamiltonian_matrix({0.5, 1.0, 0.0}); });
    EXPECT_NEAR(invariance_residual(h, h, TimeGrid(1.0, 33)), 0.0, 1e-15);
}

TEST(InvarianceResidual, Fig1AndFig2AreInvariants) {
    for (const auto& d : {preset_fig1(1.0), preset_fig2(1.0)})
        EXPECT_LE(invariance_residual(fig1_schedule(d), invariant_schedule(d), TimeGrid(1.0, 1025)), 1e-8);
}

TEST(InvarianceResidual, PerturbedAngleIsNotAnInvariant) {
    const auto d = preset_fig1(1.0);
    AngleDesign p = d;
    auto gc = d.gamma.coefficients();
    gc[2] *= 1.05;
    p.gamma = PolynomialCurve(gc);
    EXPECT_GT(invariance_residual(fig1_schedule(d), invariant_schedule(p), TimeGrid(1.0, 1025)), 1e-3);
}

TEST(DecomposeIntoModes, SuperpositionKeepsAmplitudes) {
    const auto d = preset_fig1(1.0);
    const TimeGrid g(1.0, 257);
    const auto c = controls_from_angles(d, g);
    const StateVector psi0 = std::sqrt(0.5) * (invariant_mode(d, 0.0) + invariant_mode(d, 0.0, false));
    const auto rec = propagate(fig1_schedule(d), psi0, g);
    for (std::size_t node : {std::size_t{0}, std::size_t{128}, g.size() - 1}) {
        const auto [ap, am] = lr_phase_tls(d, c, node);
        const auto amp = decompose_into_modes(rec, {invariant_mode(d, g[node]), invariant_mode(d, g[node], false)}, {ap, am},
                                              node);
        ASSERT_EQ(amp.size(), 2u);
        EXPECT_NEAR(std::abs(amp[0]), std::sqrt(0.5), 1e-8);
        EXPECT_NEAR(std::abs(amp[1]), std::sqrt(0.5), 1e-8);
        // Constant amplitudes once the LR phase is removed.
        EXPECT_NEAR(std::abs(amp[0] - cplx(std::sqrt(0.5))), 0.0, 1e-6) << "node " << node;
        EXPECT_NEAR(std::abs(amp[1] - cplx(std::sqrt(0.5))), 0.0, 1e-6) << "node " << node;
    }
    EXPECT_THROW(decompose_into_modes(rec, {invariant_mode(d, 0.0)}, {}, 0), Error);
}

TEST(Unitarity, NormDriftBoundedByTolerance) {
    const auto d = preset_fig2(1.0);
    for (double tol : {1e-8, 1e-10, 1e-12}) {
        const auto rec = propagate(fig1_schedule(d), invariant_mode(d, 0.0), TimeGrid(1.0, 129), {tol, 1e-2 * tol});
        EXPECT_LE(rec.norm_drift, 10 * tol) << "rel_tol " << tol;
    }
    const auto e = make_ermakov_design(1.0, 0.1, 2.0);
    const QuadraticSchedule h([e](double t) { return hamiltonian_form(e, t); }, 128, 1.0);
    const auto rec = propagate(h, basis(128, 0), TimeGrid(2.0, 65));
    EXPECT_LE(rec.norm_drift, 1e-9);
}

TEST(Accuracy, ConvergesToFixedStepReference) {
    const auto d = preset_fig1(1.0);
    const auto sched = fig1_schedule(d);
    const StateVector psi0 = basis(2, 1);
    const StateVector ref = oracle::rk4([&](double t) { return sched.matrix(t); }, psi0, 1.0, 1L << 16);
    double prev = 1.0;
    for (double tol : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13}) {
        const auto rec = propagate(sched, psi0, TimeGrid(1.0, 2), {tol, 1e-2 * tol});
        const double err = (rec.states.back() - ref).norm();
        EXPECT_LT(err, prev) << "rel_tol " << tol;
        EXPECT_LE(err, 1e3 * tol) << "rel_tol " << tol;
        prev = err;
    }
    EXPECT_LE(prev, 1e-12);
}

TEST(Accuracy, EndpointControlsAreSmooth) {
    // Near gamma = n pi the detuning is a ratio of two small numbers.
    const auto d = preset_fig1(1.0);
    const double limit = controls_at(d, 0.0).Delta;
    for (double t : {1e-7, 1e-6, 1e-5}) {
        EXPECT_NEAR(controls_at(d, t).Delta, limit, 40.0 * t * std::abs(limit)) << "t=" << t;
        EXPECT_NEAR(controls_at(d, 1.0 - t).Delta, controls_at(d, 1.0).Delta, 40.0 * t * std::abs(limit)) << "t_f-" << t;
    }
}

TEST(Errors, NonHermitianScheduleRejected) {
    const MatrixSchedule bad(2, [](double) {
        Eigen::MatrixXcd m(2, 2);
        m << 0.0, 1.0, 0.0, 0.0;
        return m;
    });
    try {
        propagate(bad, basis(2, 0), TimeGrid(1.0, 3));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
    }
}

TEST(Errors, InputValidation) {
    const auto h = MatrixSchedule::two_level([](double) { return hamiltonian_matrix({1.0, 0.0, 0.0}); });
    StateVector loose(2);
    loose << 1.0, 1.0;
    EXPECT_THROW(propagate(h, loose, TimeGrid(1.0, 3)), Error);
    EXPECT_THROW(propagate(h, basis(3, 0), TimeGrid(1.0, 3)), Error);
    EXPECT_THROW(propagate(h, basis(2, 0), TimeGrid(1.0, 3), {1e-3, 1e-12}), Error);
}

TEST(Errors, StepBudgetExhaustionIsNumericFailure) {
    const auto d = preset_fig1(1.0);
    PropagationOptions opt;
    opt.max_steps = 10;
    try {
        propagate(fig1_schedule(d), basis(2, 1), TimeGrid(1.0, 3), opt);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numeric);
    }
}

TEST(Determinism, RepeatedRunsAreBitIdentical) {
    const auto d = preset_fig2(1.0);
    const TimeGrid g(1.0, 33);
    const auto a = propagate(fig1_schedule(d), basis(2, 1), g);
    const auto b = propagate(fig1_schedule(d), basis(2, 1), g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(a.states[i](0), b.states[i](0));
        EXPECT_EQ(a.states[i](1), b.states[i](1));
    }
    EXPECT_EQ(a.steps.accepted, b.steps.accepted);
}

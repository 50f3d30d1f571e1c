#ifndef QFLUCT_DYNAMICS_HPP
#define QFLUCT_DYNAMICS_HPP

#include <functional>
#include <optional>
#include <vector>

#include "qfluct/generator.hpp"

namespace qf {

// Mode-basis Bogoliubov map a -> U a + conj(V) a*, evolved by
// i d/dt [U; V] = [[A, B], [-conj B, -conj A]] [U; V].
struct BogoliubovFrame {
    CMat U;
    CMat V;
    Real t = 0.0;
    Real weight = 1.0;

    int size() const { return static_cast<int>(U.rows()); }
    static BogoliubovFrame vacuum(int M, Real weight, Real t = 0.0);
};

Real particle_number(const BogoliubovFrame& f);
Real symplectic_defect(const BogoliubovFrame& f);
Real compare_frames(const BogoliubovFrame& a, const BogoliubovFrame& b);

using GeneratorFn = std::function<QuadGenerator(Real)>;

// Generators assembled on a time grid, linearly interpolated in (A, B).
class GeneratorTrack {
public:
    GeneratorTrack() = default;
    GeneratorTrack(std::vector<Real> times, std::vector<QuadGenerator> gens);
    QuadGenerator at(Real t) const;
    GeneratorFn fn() const;
    const std::vector<Real>& times() const { return times_; }
    const std::vector<QuadGenerator>& generators() const { return gens_; }

private:
    std::vector<Real> times_;
    std::vector<QuadGenerator> gens_;
};

enum class Stepper { RK4, Lawson };

struct EvolveOptions {
    Stepper stepper = Stepper::RK4;
    // Lawson: -Lap on this grid is integrated exactly and removed from A
    std::optional<Grid> kinetic;
    std::vector<Real> sample_times;  // frames kept at the nearest step
    Real defect_tol = 1e-6;
    bool monitor = true;             // abort at 100x defect_tol
    int series_every = 1;
};

struct ObservableSeries {
    std::vector<Real> times;
    std::vector<Real> particle_number;
    std::vector<Real> symplectic_defect;
    std::vector<Real> generator_norms;
};

struct Trajectory {
    BogoliubovFrame final;
    std::vector<BogoliubovFrame> samples;
    ObservableSeries series;
    int steps = 0;
};

// Integrates from frame0.t to t_final (either direction).
Trajectory evolve_frame(const BogoliubovFrame& frame0, const GeneratorFn& gen_at, Real t_final, Real dt,
                        const EvolveOptions& opt = {});

struct GrowthReport {
    Real max_particles = 0.0;
    Real final_particles = 0.0;
    Real initial_particles = 0.0;
    Real monotone_fraction = 1.0;  // share of samples sitting on their running maximum
    Real max_dip = 0.0;            // largest drop below the running maximum
    // log(<N> + 1) ~ log C + c1 exp(c2 t)
    Real C = 1.0;
    Real c1 = 0.0;
    Real c2 = 0.0;
    Real max_rel_misfit = 0.0;     // on <N> + 1
    bool finite = true;
    bool starts_at_zero = true;
};

GrowthReport growth_report(const ObservableSeries& s);

}  // namespace qf

#endif  // QFLUCT_DYNAMICS_HPP

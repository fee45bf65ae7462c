//! Hamiltonian builders, Lindblad generator, fixed-step RK4 time integration,
//! the parametric stability test and the effective parameters from adiabatic
//! elimination of the pump cavity.

mod kernel;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, DensityMatrix, ModeSpace, Operator};
use crate::C64;
use ndarray::Array2;

/// Per-step trace-drift budget; a larger drift means dt is too large for the
/// given rates and the step is rejected.
pub const TRACE_DRIFT_BUDGET: f64 = 1e-6;

/// Effective single-mode parameters of H = Δ b†b + S* b†b† + S bb + (K/2) b†b†bb.
///
/// The pump is complex: both S = 1.2i and S = -1.2 are physical choices and
/// produce transient cats along different phase-space axes. K is non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeParams {
    pub delta: f64,
    pub pump: C64,
    pub kerr: f64,
}

/// Two-mode parameters for the dissipatively coupled pair; the two-photon
/// pump is real by convention here (its phase differs from the single-mode
/// form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeParams {
    pub delta: f64,
    pub pump: f64,
    pub kerr: f64,
    pub cross_talk: f64,
    pub collective_rate: f64,
    pub local_loss_rate: f64,
}

/// Inputs of the adiabatic elimination: bare cavity/magnon frequencies, drive
/// frequency, cavity-magnon coupling g, two-photon pump G, Kerr coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParamsInput {
    pub omega_c: f64,
    pub omega_m: f64,
    pub omega_d: f64,
    pub coupling_g: C64,
    pub pump_g: C64,
    pub kerr: f64,
}

impl EffectiveParamsInput {
    pub fn delta_c(&self) -> f64 {
        self.omega_c - self.omega_d / 2.0
    }

    pub fn delta_m(&self) -> f64 {
        self.omega_m - self.omega_d / 2.0
    }

    /// The elimination assumes a strongly detuned cavity; flag inputs where
    /// |Δ_c| < 10 |g|.
    pub fn is_adiabatic(&self) -> bool {
        self.delta_c().abs() >= 10.0 * self.coupling_g.norm()
    }
}

/// Effective detuning and pump after eliminating the cavity:
/// Δ = Δ_m - |g|² Δ_c / (Δ_c² - |G|²),  S = |g|² G / (2 (Δ_c² - |G|²)).
///
/// The detuning contribution of other cavity modes is compensated by the
/// drive frequency and deliberately omitted.
pub fn effective_params(input: &EffectiveParamsInput) -> Result<SingleModeParams> {
    let dc = input.delta_c();
    let denom = dc * dc - input.pump_g.norm_sqr();
    if denom <= 0.0 {
        return Err(Error::NonPositiveDenominator(denom));
    }
    let g2 = input.coupling_g.norm_sqr();
    Ok(SingleModeParams {
        delta: input.delta_m() - g2 * dc / denom,
        pump: input.pump_g * (g2 / (2.0 * denom)),
        kerr: input.kerr,
    })
}

/// True iff the linearized model has a normal-mode decomposition: |Δ| > 2S.
/// The boundary |Δ| = 2S is classified unstable (strict inequality); negative
/// detunings enter through |Δ|.
pub fn parametric_stability(delta: f64, pump_magnitude: f64) -> bool {
    delta.abs() > 2.0 * pump_magnitude
}

/// H = Δ b†b + S* b†b† + S bb + (K/2) b†b†bb on a single mode with cutoff `n`.
pub fn single_mode_hamiltonian(p: &SingleModeParams, n: usize) -> Result<Operator> {
    let space = ModeSpace::single(n)?;
    let b = annihilation(&space, 0)?;
    let bd = b.dagger();
    let num = &bd * &b;
    let bb = &b * &b;
    let bdbd = bb.dagger();
    let kerr = &(&bdbd * &bb);
    let h = &(&num.scale(p.delta.into()) + &bdbd.scale(p.pump.conj()))
        + &(&bb.scale(p.pump) + &kerr.scale((p.kerr / 2.0).into()));
    Ok(h)
}

/// Two-mode Hamiltonian
/// H = S (b1² + b1†² + b2² + b2†²) + (K/2)(b1†²b1² + b2†²b2²)
///   + Δ (b1†b1 + b2†b2) + g (b1†b2 + b1 b2†),
/// each mode truncated at `n`.
pub fn two_mode_hamiltonian(p: &TwoModeParams, n: usize) -> Result<Operator> {
    let space = ModeSpace::two(n)?;
    let b1 = annihilation(&space, 0)?;
    let b2 = annihilation(&space, 1)?;
    let (b1d, b2d) = (b1.dagger(), b2.dagger());

    let mut h = Operator::zeros(space);
    for b in [&b1, &b2] {
        let bb = b * b;
        let bdbd = bb.dagger();
        h = &h + &(&bb + &bdbd).scale(p.pump.into());
        h = &h + &(&bdbd * &bb).scale((p.kerr / 2.0).into());
        h = &h + &(&b.dagger() * b).scale(p.delta.into());
    }
    let hop = &(&b1d * &b2) + &(&b1 * &b2d);
    h = &h + &hop.scale(p.cross_talk.into());
    Ok(h)
}

/// Collective loss operator L_c = sqrt(γ_c) (b1 + b2).
pub fn collective_loss(gamma_c: f64, n: usize) -> Result<Operator> {
    if gamma_c < 0.0 {
        return Err(Error::NegativeRate(gamma_c));
    }
    let space = ModeSpace::two(n)?;
    let b1 = annihilation(&space, 0)?;
    let b2 = annihilation(&space, 1)?;
    Ok((&b1 + &b2).scale(gamma_c.sqrt().into()))
}

/// Local single-photon loss L_s = sqrt(γ_s) b_mode on a two-mode space.
pub fn local_loss(gamma_s: f64, mode: usize, n: usize) -> Result<Operator> {
    if gamma_s < 0.0 {
        return Err(Error::NegativeRate(gamma_s));
    }
    let space = ModeSpace::two(n)?;
    let b = annihilation(&space, mode)?;
    Ok(b.scale(gamma_s.sqrt().into()))
}

/// Hamiltonian plus collapse operators; rates are folded into the collapse
/// operator prefactors (e.g. sqrt(γ_c)).
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: Operator,
    collapse_ops: Vec<Operator>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, collapse_ops: Vec<Operator>) -> Result<Self> {
        let herm = hamiltonian.hermiticity_error();
        if herm > 1e-9 {
            return Err(Error::InvalidState(format!(
                "Hamiltonian deviates from Hermitian by {herm:.3e}"
            )));
        }
        for l in &collapse_ops {
            if l.space() != hamiltonian.space() {
                return Err(Error::DimensionMismatch {
                    expected: hamiltonian.dim(),
                    got: l.dim(),
                });
            }
        }
        Ok(Self {
            hamiltonian,
            collapse_ops,
        })
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[Operator] {
        &self.collapse_ops
    }

    pub fn space(&self) -> &ModeSpace {
        self.hamiltonian.space()
    }

    /// G = -iH - 1/2 sum_k L_k†L_k; the RHS is G rho + rho G† + sum_k L_k rho L_k†.
    fn effective_generator(&self) -> Array2<C64> {
        let mut g = self.hamiltonian.matrix().mapv(|z| z * C64::new(0.0, -1.0));
        for l in &self.collapse_ops {
            let ldl = &l.dagger() * l;
            g = g - ldl.matrix().mapv(|z| z * 0.5);
        }
        g
    }
}

/// dρ/dt = -i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k†L_k, ρ}).
///
/// Reference dense evaluation; the integrator uses an equivalent sparse
/// kernel. The result is traceless and Hermitian up to rounding.
pub fn lindblad_rhs(model: &LindbladModel, rho: &DensityMatrix) -> Result<Array2<C64>> {
    if rho.space() != model.space() {
        return Err(Error::DimensionMismatch {
            expected: model.hamiltonian.dim(),
            got: rho.dim(),
        });
    }
    let h = model.hamiltonian.matrix();
    let r = rho.matrix();
    let mut out = h.dot(r) - r.dot(h);
    out.mapv_inplace(|z| z * C64::new(0.0, -1.0));
    for l in &model.collapse_ops {
        let lm = l.matrix();
        let ld = lm.t().mapv(|z| z.conj());
        let ldl = ld.dot(lm);
        let anti = (ldl.dot(r) + r.dot(&ldl)).mapv(|z| z * 0.5);
        out = out + lm.dot(r).dot(&ld) - anti;
    }
    Ok(out)
}

/// Saved density-matrix frames along an integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &DensityMatrix)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Integrate the master equation with classical fixed-step RK4, streaming
/// saved frames to `observer` instead of storing them.
///
/// Frames are emitted at t = 0, every `save_every` steps, and at the final
/// step. After every step the state is Hermitized and trace-renormalized; a
/// pre-renormalization trace drift above [`TRACE_DRIFT_BUDGET`] rejects the
/// step size. Returns the final state.
pub fn evolve_observed<F>(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    save_every: usize,
    mut observer: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    if rho0.space() != model.space() {
        return Err(Error::DimensionMismatch {
            expected: model.hamiltonian.dim(),
            got: rho0.dim(),
        });
    }
    if !(dt > 0.0) || t_final < 0.0 {
        return Err(Error::InvalidState(format!(
            "need dt > 0 and t_final >= 0, got dt = {dt}, t_final = {t_final}"
        )));
    }
    let save_every = save_every.max(1);
    let g = kernel::CsrMat::from_dense(&model.effective_generator());
    let ls: Vec<kernel::CsrMat> = model
        .collapse_ops
        .iter()
        .map(|l| kernel::CsrMat::from_dense(l.matrix()))
        .collect();

    let mut rho = kernel::Planar::from_dense(rho0.matrix());
    let mut ws = kernel::Rk4Workspace::new(rho.dim);
    let steps = (t_final / dt).round() as usize;

    observer(0.0, rho0)?;
    for k in 0..steps {
        let drift = kernel::rk4_step(&g, &ls, &mut rho, dt, &mut ws);
        let t = (k + 1) as f64 * dt;
        if drift > TRACE_DRIFT_BUDGET {
            return Err(Error::StepSizeRejected { time: t, drift });
        }
        if (k + 1) % save_every == 0 || k + 1 == steps {
            let frame = DensityMatrix::from_parts_unchecked(model.space().clone(), rho.to_dense());
            observer(t, &frame)?;
        }
    }
    if steps == 0 {
        return Ok(rho0.clone());
    }
    Ok(DensityMatrix::from_parts_unchecked(
        model.space().clone(),
        rho.to_dense(),
    ))
}

/// Integrate and collect the thinned frames into a [`Trajectory`].
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    save_every: usize,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    evolve_observed(model, rho0, t_final, dt, save_every, |t, rho| {
        times.push(t);
        states.push(rho.clone());
        Ok(())
    })?;
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{
        coherent_state, entangled_cat, fidelity, number_op, StateVector,
    };
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;

    const N: usize = 15;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn effective_params_examples() {
        // pump-off limit: S = 0, pure dispersive shift
        let mut input = EffectiveParamsInput {
            omega_c: 12.0,
            omega_m: 3.0,
            omega_d: 4.0,
            coupling_g: c(1.0, 0.0),
            pump_g: c(0.0, 0.0),
            kerr: 0.3,
        };
        let p = effective_params(&input).unwrap();
        assert_abs_diff_eq!(p.pump.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta, 1.0 - 1.0 / 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.kerr, 0.3, epsilon = 1e-15);

        // dc = 10, G = 2, g = 1, dm = 1: S = 2/192, delta = 1 - 10/96
        input.pump_g = c(2.0, 0.0);
        let p = effective_params(&input).unwrap();
        assert_abs_diff_eq!(p.pump.re, 2.0 / 192.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.delta, 1.0 - 10.0 / 96.0, epsilon = 1e-12);

        // decoupled limit
        input.coupling_g = c(0.0, 0.0);
        let p = effective_params(&input).unwrap();
        assert_abs_diff_eq!(p.delta, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.pump.norm(), 0.0, epsilon = 1e-15);

        // non-positive denominator
        input.pump_g = c(11.0, 0.0);
        assert!(effective_params(&input).is_err());
    }

    #[test]
    fn stability_criterion() {
        assert!(parametric_stability(1.0, 0.4));
        assert!(!parametric_stability(1.0, 0.5)); // boundary counts as unstable
        assert!(!parametric_stability(1.0, 1.8)); // the working point is unstable
        assert!(parametric_stability(-1.0, 0.4)); // |delta| handling
    }

    #[test]
    fn single_mode_hamiltonian_elements() {
        let p = SingleModeParams {
            delta: 0.7,
            pump: c(0.0, 0.0),
            kerr: 0.0,
        };
        let h = single_mode_hamiltonian(&p, 5).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(h.matrix()[[i, i]].re, 0.7 * i as f64, epsilon = 1e-12);
        }

        let p = SingleModeParams {
            delta: 1.0,
            pump: c(0.3, 1.2),
            kerr: 0.9,
        };
        let h = single_mode_hamiltonian(&p, 6).unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        // <2|H|0> = sqrt(2) S*
        let expect = p.pump.conj() * 2f64.sqrt();
        assert!((h.matrix()[[2, 0]] - expect).norm() < 1e-12);
        // <2|H|2> = 2 delta + K
        assert_abs_diff_eq!(h.matrix()[[2, 2]].re, 2.0 + 0.9, epsilon = 1e-12);
    }

    #[test]
    fn two_mode_hamiltonian_structure() {
        let p = TwoModeParams {
            delta: 1.0,
            pump: 1.8,
            kerr: 1.2,
            cross_talk: 0.0,
            collective_rate: 0.0,
            local_loss_rate: 0.0,
        };
        let h = two_mode_hamiltonian(&p, 6).unwrap();
        assert!(h.hermiticity_error() < 1e-12);

        // g = 0 decouples into H1 (x) I + I (x) H2 with a real pump
        let sp = crate::hilbert::ModeSpace::single(6).unwrap();
        let single = single_mode_hamiltonian(
            &SingleModeParams {
                delta: 1.0,
                pump: c(1.8, 0.0),
                kerr: 1.2,
            },
            6,
        )
        .unwrap();
        let eye = Operator::identity(sp);
        let sum = &crate::hilbert::tensor(&single, &eye) + &crate::hilbert::tensor(&eye, &single);
        let diff = (h.matrix() - sum.matrix()).mapv(|z| z.norm()).sum();
        assert!(diff < 1e-10);

        // hopping element <10|H|01> = g
        let p2 = TwoModeParams {
            cross_talk: 0.37,
            ..p
        };
        let h2 = two_mode_hamiltonian(&p2, 6).unwrap();
        let row = 1 * 6; // |n1=1, n2=0>
        let col = 1; // |n1=0, n2=1>
        assert!((h2.matrix()[[row, col]] - c(0.37, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_mode_expectation_against_contraction_oracle() {
        // independent brute-force contraction of <psi|H|psi>
        let p = TwoModeParams {
            delta: 1.0,
            pump: 1.8,
            kerr: 1.2,
            cross_talk: 0.0,
            collective_rate: 0.0,
            local_loss_rate: 0.0,
        };
        let h = two_mode_hamiltonian(&p, N).unwrap();
        let psi = entangled_cat(c(0.0, 1.4), N).unwrap();
        let via_apply = psi.inner(&h.apply(&psi));

        let mut brute = c(0.0, 0.0);
        let amps = psi.amplitudes();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                brute += amps[i].conj() * h.matrix()[[i, j]] * amps[j];
            }
        }
        assert!((via_apply - brute).norm() < 1e-10);
        assert!(via_apply.im.abs() < 1e-10);
    }

    #[test]
    fn loss_operators() {
        assert!(collective_loss(-1.0, 4).is_err());
        assert!(local_loss(-0.1, 0, 4).is_err());

        let z = collective_loss(0.0, 4).unwrap();
        assert_eq!(z.matrix().mapv(|v| v.norm()).sum(), 0.0);

        // sqrt(gamma_s) |0><1| action on |1,0>
        let l0 = local_loss(0.25, 0, 4).unwrap();
        let sp = ModeSpace::two(4).unwrap();
        let v10 = StateVector::basis_state(sp.clone(), 1 * 4).unwrap();
        let acted = l0.apply(&v10);
        assert_abs_diff_eq!(acted.amplitudes()[0].re, 0.5, epsilon = 1e-15);

        // dark/bright branch amplitudes of the collective loss
        let lc = collective_loss(2.0, N).unwrap();
        let alpha = c(0.0, 1.4);
        let plus = coherent_state(alpha, N).unwrap();
        let minus = coherent_state(-alpha, N).unwrap();
        let pp = plus.tensor(&plus);
        let pm = plus.tensor(&minus);
        let bright = lc.apply(&pp);
        let expected = 2.0 * 2f64.sqrt() * alpha; // 2 sqrt(gamma_c) alpha
        assert!((pp.inner(&bright) - expected).norm() < 1e-6);
        let dark = lc.apply(&pm);
        assert!(dark.norm() * dark.norm() < 1e-6);
    }

    #[test]
    fn local_loss_dissipators_commute_on_product_states() {
        // small-N superoperator oracle: D1 and D2 commute as maps
        let n = 3;
        let sp = ModeSpace::two(n).unwrap();
        let h0 = Operator::zeros(sp.clone());
        let m1 = LindbladModel::new(h0.clone(), vec![local_loss(0.8, 0, n).unwrap()]).unwrap();
        let m2 = LindbladModel::new(h0, vec![local_loss(0.8, 1, n).unwrap()]).unwrap();

        let psi = coherent_state(c(0.4, 0.1), n)
            .unwrap()
            .tensor(&coherent_state(c(-0.2, 0.3), n).unwrap());
        let rho = psi.to_density();
        let d1 = |r: &DensityMatrix| {
            DensityMatrix::from_parts_unchecked(r.space().clone(), lindblad_rhs(&m1, r).unwrap())
        };
        let d2 = |r: &DensityMatrix| {
            DensityMatrix::from_parts_unchecked(r.space().clone(), lindblad_rhs(&m2, r).unwrap())
        };
        let ab = d1(&d2(&rho));
        let ba = d2(&d1(&rho));
        let diff = (ab.matrix() - ba.matrix()).mapv(|z| z.norm()).sum();
        assert!(diff < 1e-12, "superoperators do not commute: {diff:e}");
    }

    #[test]
    fn rhs_trivial_and_qubit_oracle() {
        // H = 0, no collapse: zero matrix
        let sp = ModeSpace::single(4).unwrap();
        let m = LindbladModel::new(Operator::zeros(sp.clone()), vec![]).unwrap();
        let rho = DensityMatrix::vacuum(sp);
        let out = lindblad_rhs(&m, &rho).unwrap();
        assert_eq!(out.mapv(|z| z.norm()).sum(), 0.0);

        // single qubit: H = sigma_z, rho = |+><+| -> off-diagonals rotate at rate 2
        let sp2 = ModeSpace::single(2).unwrap();
        let mut sz = Array2::zeros((2, 2));
        sz[[0, 0]] = c(1.0, 0.0);
        sz[[1, 1]] = c(-1.0, 0.0);
        let h = Operator::new(sp2.clone(), sz).unwrap();
        let plus = StateVector::new(
            sp2.clone(),
            Array1::from(vec![c(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2]),
        )
        .unwrap();
        let model = LindbladModel::new(h, vec![]).unwrap();
        let out = lindblad_rhs(&model, &plus.to_density()).unwrap();
        // hand oracle: d rho01/dt = -2 i rho01 = -i
        assert!((out[[0, 1]] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((out[[1, 0]] - c(0.0, 1.0)).norm() < 1e-14);
        assert_abs_diff_eq!(out[[0, 0]].norm(), 0.0, epsilon = 1e-14);

        // trace and Hermiticity of the RHS
        let tr: C64 = out.diag().iter().sum();
        assert!(tr.norm() < 1e-12);
    }

    #[test]
    fn rhs_dark_state_dissipator_vanishes() {
        let lc = collective_loss(5.0, N).unwrap();
        let sp = lc.space().clone();
        let model = LindbladModel::new(Operator::zeros(sp), vec![lc]).unwrap();
        let rho = entangled_cat(c(0.0, 1.4), N).unwrap().to_density();
        let out = lindblad_rhs(&model, &rho).unwrap();
        let max = out.mapv(|z| z.norm()).fold(0.0f64, |a, &b| a.max(b));
        // bounded by the truncation residual of the dark state
        assert!(max < 1e-2, "dissipator leak {max:e}");
        let tr: C64 = out.diag().iter().sum();
        assert!(tr.norm() < 1e-12);
    }

    #[test]
    fn kernel_matches_dense_rhs() {
        // random-ish small model: H Hermitian, two collapse ops
        let n = 4;
        let sp = ModeSpace::two(n).unwrap();
        let d = sp.dim();
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut rnd = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut hm = Array2::zeros((d, d));
        for i in 0..d {
            hm[[i, i]] = c(rnd(), 0.0);
            for j in (i + 1)..d {
                let z = c(rnd(), rnd());
                hm[[i, j]] = z;
                hm[[j, i]] = z.conj();
            }
        }
        let h = Operator::new(sp.clone(), hm).unwrap();
        let l1 = collective_loss(0.7, n).unwrap();
        let l2 = local_loss(0.3, 1, n).unwrap();
        let model = LindbladModel::new(h, vec![l1, l2]).unwrap();

        let psi = coherent_state(c(0.3, -0.2), n)
            .unwrap()
            .tensor(&cat_like(n, &mut rnd));
        let rho = psi.normalized().to_density();

        let dense = lindblad_rhs(&model, &rho).unwrap();

        let g = super::kernel::CsrMat::from_dense(&model.effective_generator());
        let ls: Vec<_> = model
            .collapse_ops()
            .iter()
            .map(|l| super::kernel::CsrMat::from_dense(l.matrix()))
            .collect();
        let rp = super::kernel::Planar::from_dense(rho.matrix());
        let mut out = super::kernel::Planar::zeros(d);
        super::kernel::rhs(&g, &ls, &rp, &mut out);
        let fast = out.to_dense();

        let worst = (&dense - &fast).mapv(|z| z.norm()).fold(0.0f64, |a, &b| a.max(b));
        assert!(worst < 1e-12, "kernel deviates from dense RHS by {worst:e}");
    }

    fn cat_like(n: usize, rnd: &mut impl FnMut() -> f64) -> StateVector {
        let sp = ModeSpace::single(n).unwrap();
        let amps = Array1::from((0..n).map(|_| c(rnd(), rnd())).collect::<Vec<_>>());
        StateVector::new(sp, amps).unwrap().normalized()
    }

    #[test]
    fn evolve_energy_eigenstate_is_stationary() {
        let p = SingleModeParams {
            delta: 1.0,
            pump: c(0.0, 0.0),
            kerr: 0.0,
        };
        let h = single_mode_hamiltonian(&p, 6).unwrap();
        let sp = h.space().clone();
        let model = LindbladModel::new(h, vec![]).unwrap();
        let rho0 = StateVector::basis_state(sp, 1).unwrap().to_density();
        let traj = evolve(&model, &rho0, 2.0, 1e-3, 400).unwrap();
        for (_, state) in traj.iter() {
            let dev = (state.matrix() - rho0.matrix())
                .mapv(|z| z.norm())
                .fold(0.0f64, |a, &b| a.max(b));
            assert!(dev < 1e-10, "energy eigenstate drifted by {dev:e}");
        }
    }

    #[test]
    fn evolve_purity_decay_first_step() {
        let p = TwoModeParams {
            delta: 1.0,
            pump: 1.8,
            kerr: 1.2,
            cross_talk: 0.0,
            collective_rate: 5.0,
            local_loss_rate: 0.0,
        };
        let h = two_mode_hamiltonian(&p, 8).unwrap();
        let lc = collective_loss(5.0, 8).unwrap();
        let model = LindbladModel::new(h, vec![lc]).unwrap();
        // pure, non-dark initial state
        let psi = coherent_state(c(0.4, 0.4), 8)
            .unwrap()
            .tensor(&coherent_state(c(0.4, 0.4), 8).unwrap());
        let rho0 = psi.to_density();
        let traj = evolve(&model, &rho0, 5e-4, 5e-4, 1).unwrap();
        let p0 = traj.states()[0].purity();
        let p1 = traj.states()[1].purity();
        assert!(p1 <= p0 + 1e-12, "purity grew: {p0} -> {p1}");
    }

    #[test]
    fn evolve_saves_first_and_last_frame() {
        let sp = ModeSpace::single(3).unwrap();
        let model = LindbladModel::new(Operator::zeros(sp.clone()), vec![]).unwrap();
        let rho0 = DensityMatrix::vacuum(sp);
        let traj = evolve(&model, &rho0, 0.01, 1e-3, 3).unwrap();
        assert_eq!(traj.times()[0], 0.0);
        assert_abs_diff_eq!(*traj.times().last().unwrap(), 0.01, epsilon = 1e-12);
        for w in traj.times().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn stability_flag_consistency_bounded_vs_growth() {
        // S < delta/2: vacuum photon number stays bounded over t in [0, 50]
        let sp = ModeSpace::single(N).unwrap();
        let nop = number_op(&sp, 0).unwrap();
        let stable = single_mode_hamiltonian(
            &SingleModeParams {
                delta: 1.0,
                pump: c(0.4, 0.0),
                kerr: 0.0,
            },
            N,
        )
        .unwrap();
        let model = LindbladModel::new(stable, vec![]).unwrap();
        let rho0 = DensityMatrix::vacuum(sp.clone());
        let mut nmax = 0.0f64;
        evolve_observed(&model, &rho0, 50.0, 1e-3, 500, |_, rho| {
            nmax = nmax.max(rho.expect(&nop).re);
            Ok(())
        })
        .unwrap();
        assert!(nmax < 2.0, "stable pump exceeded bound: <n>max = {nmax}");

        // S > delta/2: <n> grows monotonically over t in [0, 2] (before truncation)
        let unstable = single_mode_hamiltonian(
            &SingleModeParams {
                delta: 1.0,
                pump: c(0.6, 0.0),
                kerr: 0.0,
            },
            N,
        )
        .unwrap();
        let model = LindbladModel::new(unstable, vec![]).unwrap();
        let mut series = Vec::new();
        evolve_observed(&model, &rho0, 2.0, 1e-3, 200, |_, rho| {
            series.push(rho.expect(&nop).re);
            Ok(())
        })
        .unwrap();
        for w in series.windows(2) {
            assert!(w[1] > w[0] - 1e-12, "growth not monotone: {:?}", w);
        }
        assert!(series.last().unwrap() > &0.1);
    }

    #[test]
    fn evolve_dimension_mismatch() {
        let sp = ModeSpace::single(4).unwrap();
        let model = LindbladModel::new(Operator::zeros(sp), vec![]).unwrap();
        let rho0 = DensityMatrix::vacuum(ModeSpace::single(5).unwrap());
        assert!(evolve(&model, &rho0, 1.0, 0.1, 1).is_err());
    }
}

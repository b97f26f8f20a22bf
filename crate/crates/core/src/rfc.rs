//! Random feature conceptors: the two-sublayer reformulation where states
//! are randomly expanded into a higher-dimensional z space so the conceptor
//! becomes a vector applied elementwise, plus the layer hierarchy used for
//! blind input equalization.

use crate::error::{invalid_param, Error, Result};
use crate::linalg::{ensure_vector_finite, spectral_radius, Matrix, Vector};
use crate::reservoir::Readout;
use crate::rng::SeedRng;
use crate::signals::TimeSeries;

/// Elementwise conceptor on the expansion space. Entries live in [0,1]:
/// 1 admits a z direction, 0 suppresses it.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorConceptor {
    pub c: Vector,
    pub aperture: f64,
}

impl VectorConceptor {
    /// All-ones conceptor: unconstrained dynamics. Infinite aperture is
    /// the consistent label (the fixed point s/(s+gamma^-2) is 1 there).
    pub fn identity(n_rfc: usize) -> VectorConceptor {
        VectorConceptor {
            c: Vector::from_element(n_rfc, 1.0),
            aperture: f64::INFINITY,
        }
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }
}

/// One RFC layer: x is the base state, z the random expansion; only the
/// z -> x path carries trained-in spectral scaling.
#[derive(Debug, Clone)]
pub struct RfcLayer {
    pub n: usize,
    pub n_rfc: usize,
    /// Expansion F' (N_RFC x N), entries N(0, 1/N) so each z component has
    /// variance comparable to a single unit activation.
    pub f_expand: Matrix,
    /// Compression-and-recurrence G (N x N_RFC), rescaled so the composite
    /// loop map G F' has spectral radius rho.
    pub g: Matrix,
    pub w_in: Matrix,
    pub bias: Vector,
    pub readout: Option<Readout>,
    pub x: Vector,
    pub z: Vector,
    pub c_adapt: VectorConceptor,
    pub rho: f64,
    pub rho_in: f64,
    pub rho_b: f64,
    /// Current rescale of F' relative to the raw draw (G carries the
    /// inverse, so the loop map G F' is unchanged). Training moves this to
    /// its spec value by ratio, which keeps retraining stable.
    pub expansion_scale: f64,
    pub seed: u64,
}

/// Build an untrained layer. Draw order: W, F' raw, F_comp, W_in, bias.
/// The input is single-channel; the hierarchy feeds each layer the scalar
/// output of the one below.
pub fn rfc_init(
    n: usize,
    n_rfc: usize,
    rho: f64,
    rho_in: f64,
    rho_b: f64,
    seed: u64,
) -> Result<RfcLayer> {
    if n == 0 {
        return Err(invalid_param("n", "layer needs at least one unit"));
    }
    if n_rfc < n {
        return Err(invalid_param(
            "n_rfc",
            format!("expansion must not shrink: n_rfc {n_rfc} < n {n}"),
        ));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(invalid_param("rho", format!("spectral radius {rho} must be positive and finite")));
    }
    if !rho_in.is_finite() || !rho_b.is_finite() {
        return Err(invalid_param("rho_in", "scalings must be finite"));
    }

    let mut rng = SeedRng::new(seed);
    let w = rng.normal_matrix(n, n);
    let f_expand = rng.normal_matrix(n_rfc, n) / (n as f64).sqrt();
    let f_comp = rng.normal_matrix(n, n_rfc) / (n_rfc as f64).sqrt();
    let w_in = rng.normal_matrix(n, 1) * rho_in;
    let bias = rng.normal_vector(n) * rho_b;

    let g_raw = w * f_comp;
    let loop_map = &g_raw * &f_expand;
    let actual = spectral_radius(&loop_map)?;
    if actual < 1e-300 {
        return Err(Error::ZeroSpectralRadius);
    }
    let g = g_raw * (rho / actual);

    Ok(RfcLayer {
        n,
        n_rfc,
        f_expand,
        g,
        w_in,
        bias,
        readout: None,
        x: Vector::zeros(n),
        z: Vector::zeros(n_rfc),
        c_adapt: VectorConceptor::identity(n_rfc),
        rho,
        rho_in,
        rho_b,
        expansion_scale: 1.0,
        seed,
    })
}

fn check_layer_input(layer: &RfcLayer, u: &Vector) -> Result<()> {
    if u.nrows() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "layer input is single-channel, got {} channels",
            u.nrows()
        )));
    }
    if layer.c_adapt.dim() != layer.n_rfc {
        return Err(Error::DimensionMismatch(format!(
            "conceptor is {}-dim, expansion is {}-dim",
            layer.c_adapt.dim(),
            layer.n_rfc
        )));
    }
    ensure_vector_finite(u, "layer input")
}

/// Advance one step in place: x(k+1) = tanh(G z(k) + W_in u(k) + b),
/// z(k+1) = c_adapt (.) F' x(k+1). Returns the readout of the new state
/// when a readout is attached.
pub fn rfc_step_mut(layer: &mut RfcLayer, u: &Vector) -> Result<Option<Vector>> {
    check_layer_input(layer, u)?;
    let mut x_next = layer.bias.clone();
    x_next.gemv(1.0, &layer.g, &layer.z, 1.0);
    x_next.gemv(1.0, &layer.w_in, u, 1.0);
    x_next.apply(|v| *v = v.tanh());

    let mut z_next = &layer.f_expand * &x_next;
    z_next.component_mul_assign(&layer.c_adapt.c);

    layer.x = x_next;
    layer.z = z_next;
    Ok(layer.readout.as_ref().map(|r| r.apply(&layer.x)))
}

/// Pure form: next (x, z, y) without touching the layer.
pub fn rfc_step(layer: &RfcLayer, u: &Vector) -> Result<(Vector, Vector, Option<Vector>)> {
    let mut scratch = layer.clone();
    let y = rfc_step_mut(&mut scratch, u)?;
    Ok((scratch.x, scratch.z, y))
}

/// Merged vector CCL update, elementwise:
/// c += eta(z^2 - c(.)z^2 - gamma^-2 c) - beta(c - c_target), clipped to [0,1].
pub fn vector_ccl_step_mut(
    c_adapt: &mut VectorConceptor,
    z: &Vector,
    eta: f64,
    gamma: f64,
    beta: f64,
    c_target: &VectorConceptor,
) -> Result<()> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(invalid_param("eta", format!("learning rate {eta} must be finite and >= 0")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidAperture(gamma));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid_param("beta", format!("control gain {beta} must lie in [0,1]")));
    }
    let n = c_adapt.dim();
    if z.nrows() != n || c_target.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "conceptor {}-dim, z {}-dim, target {}-dim",
            n,
            z.nrows(),
            c_target.dim()
        )));
    }
    let gamma_inv2 = gamma.powi(-2);
    for i in 0..n {
        let zz = z[i] * z[i];
        let c = c_adapt.c[i];
        let next = c + eta * (zz - c * zz - gamma_inv2 * c) - beta * (c - c_target.c[i]);
        c_adapt.c[i] = next.clamp(0.0, 1.0);
    }
    c_adapt.aperture = gamma;
    Ok(())
}

/// Pure form of [`vector_ccl_step_mut`].
pub fn vector_ccl_step(
    c_adapt: &VectorConceptor,
    z: &Vector,
    eta: f64,
    gamma: f64,
    beta: f64,
    c_target: &VectorConceptor,
) -> Result<VectorConceptor> {
    let mut out = c_adapt.clone();
    vector_ccl_step_mut(&mut out, z, eta, gamma, beta, c_target)?;
    Ok(out)
}

/// Training protocol for one layer. Beyond the aperture and ridge constant
/// this bundles the knobs that make a replicated stack usable: the z-space
/// rescale that balances the two sublayers, input noise during the readout
/// harvest (teaches the readout to discount off-pattern components fed up
/// the stack), and the control-loop rates used while harvesting so the
/// readout is fit on the regime it will actually run in.
#[derive(Debug, Clone)]
pub struct RfcTrainSpec {
    pub gamma: f64,
    pub reg: f64,
    /// Steps discarded at the start of every drive pass.
    pub washout: usize,
    /// Drive length per target-conceptor iteration.
    pub target_len: usize,
    /// Cap on target-conceptor iterations (convergence usually takes 3-5).
    pub target_iters: usize,
    /// Drive length for the readout harvest.
    pub fit_len: usize,
    /// Rescale applied to F' (inverse to G).
    pub expansion_scale: f64,
    /// Std dev of white input noise during the readout harvest.
    pub train_noise: f64,
    pub noise_seed: u64,
    /// Control-loop rates active during the readout harvest.
    pub eta: f64,
    pub beta: f64,
}

impl RfcTrainSpec {
    pub fn new(gamma: f64, reg: f64) -> RfcTrainSpec {
        RfcTrainSpec {
            gamma,
            reg,
            washout: 100,
            target_len: 1800,
            target_iters: 10,
            fit_len: 3600,
            expansion_scale: 0.85,
            train_noise: 0.2,
            noise_seed: 901,
            eta: 0.8,
            beta: 4e-3,
        }
    }
}

/// Train a layer from a clean single-channel signal.
///
/// The target conceptor is made self-consistent: starting from the
/// unconstrained layer, drive under the current c, re-derive c from the
/// mean squared expansion activity via the fixed-point formula
/// m/(m + gamma^-2), and repeat until the profile stops moving. A target
/// computed this way describes the very regime it induces, so the control
/// loop's equilibrium coincides with c_target for any eta, beta, and the
/// single readout fit below serves both the frozen and the adaptive
/// conditions.
///
/// The readout is then fit by ridge regression for one-step prediction on
/// states harvested while the layer is driven by the signal plus white
/// noise with the control loop running. Leaves the layer at rest with
/// c_adapt = c_target and the readout attached.
pub fn train_rfc_layer(
    layer: &mut RfcLayer,
    u_series: &TimeSeries,
    spec: &RfcTrainSpec,
) -> Result<VectorConceptor> {
    if u_series.channels() != 1 {
        return Err(Error::NotSingleChannel(u_series.channels()));
    }
    if !(spec.gamma > 0.0) {
        return Err(Error::InvalidAperture(spec.gamma));
    }
    if !(spec.expansion_scale > 0.0) || !spec.expansion_scale.is_finite() {
        return Err(invalid_param(
            "expansion_scale",
            format!("rescale {} must be positive and finite", spec.expansion_scale),
        ));
    }
    if !(spec.train_noise >= 0.0) || !spec.train_noise.is_finite() {
        return Err(invalid_param(
            "train_noise",
            format!("noise level {} must be finite and >= 0", spec.train_noise),
        ));
    }
    if spec.target_iters == 0 {
        return Err(invalid_param("target_iters", "need at least one target iteration"));
    }
    let needed = spec.target_len.max(spec.fit_len) + 1;
    if u_series.len() < needed
        || spec.target_len < spec.washout + 2
        || spec.fit_len < spec.washout + 2
    {
        return Err(Error::SeriesTooShort {
            len: u_series.len(),
            needed,
        });
    }

    let ratio = spec.expansion_scale / layer.expansion_scale;
    layer.f_expand *= ratio;
    layer.g /= ratio;
    layer.expansion_scale = spec.expansion_scale;

    let gamma_inv2 = spec.gamma.powi(-2);
    let mut c_target = VectorConceptor::identity(layer.n_rfc);
    c_target.aperture = spec.gamma;
    for it in 0..spec.target_iters {
        layer.x.fill(0.0);
        layer.z.fill(0.0);
        layer.c_adapt = c_target.clone();
        let mut z_sq = Vector::zeros(layer.n_rfc);
        for k in 0..spec.target_len {
            rfc_step_mut(layer, &u_series.at(k))?;
            if k >= spec.washout {
                for i in 0..layer.n_rfc {
                    z_sq[i] += layer.z[i] * layer.z[i];
                }
            }
        }
        z_sq /= (spec.target_len - spec.washout) as f64;
        let next = z_sq.map(|m| m / (m + gamma_inv2));
        let delta = (&next - &c_target.c).norm() / (layer.n_rfc as f64).sqrt();
        c_target.c = next;
        if it >= 2 && delta < 1e-6 {
            break;
        }
    }

    let mut noise_rng = SeedRng::new(spec.noise_seed);
    layer.x.fill(0.0);
    layer.z.fill(0.0);
    layer.c_adapt = c_target.clone();
    let kept = spec.fit_len - spec.washout;
    let mut states = Matrix::zeros(layer.n, kept);
    let mut targets = Matrix::zeros(kept, 1);
    let mut u = Vector::zeros(1);
    for k in 0..spec.fit_len {
        u[0] = u_series.data[(k, 0)] + spec.train_noise * noise_rng.standard_normal();
        rfc_step_mut(layer, &u)?;
        let z_now = layer.z.clone();
        vector_ccl_step_mut(&mut layer.c_adapt, &z_now, spec.eta, spec.gamma, spec.beta, &c_target)?;
        if k >= spec.washout {
            let j = k - spec.washout;
            states.set_column(j, &layer.x);
            targets[(j, 0)] = u_series.data[(k + 1, 0)];
        }
    }

    let targets = TimeSeries::new(targets)?;
    layer.readout = Some(Readout::fit(&states, &targets, spec.reg)?);
    layer.x.fill(0.0);
    layer.z.fill(0.0);
    layer.c_adapt = c_target.clone();
    Ok(c_target)
}

/// Stack of identical trained layers; layer 1 reads the external signal,
/// each later layer reads the scalar output of the one below. Every layer
/// runs its own conceptor state against the shared target.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub layers: Vec<RfcLayer>,
    pub c_target: VectorConceptor,
    pub eta: f64,
    pub beta: f64,
    /// false freezes every layer at c_target (the no-adaptation control).
    pub adapt: bool,
}

impl Hierarchy {
    /// Replicate a trained layer `depth` times, each replica reset to rest
    /// with its conceptor at the shared target.
    pub fn new(
        trained: &RfcLayer,
        depth: usize,
        eta: f64,
        beta: f64,
        adapt: bool,
    ) -> Result<Hierarchy> {
        if depth == 0 {
            return Err(invalid_param("depth", "hierarchy needs at least one layer"));
        }
        if trained.readout.is_none() {
            return Err(Error::DegenerateInput(
                "hierarchy needs a trained layer with a readout".into(),
            ));
        }
        if trained.c_adapt.aperture.is_infinite() {
            return Err(Error::DegenerateInput(
                "hierarchy needs a target conceptor; train the layer first".into(),
            ));
        }
        let c_target = trained.c_adapt.clone();
        let mut proto = trained.clone();
        proto.x.fill(0.0);
        proto.z.fill(0.0);
        proto.c_adapt = c_target.clone();
        Ok(Hierarchy {
            layers: vec![proto; depth],
            c_target,
            eta,
            beta,
            adapt,
        })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

/// Advance the whole stack one step and return each layer's output,
/// bottom to top. Conceptor adaptation (when enabled) uses the expansion
/// state the step just produced.
pub fn hierarchy_step(h: &mut Hierarchy, u: &Vector) -> Result<Vec<Vector>> {
    let mut outputs = Vec::with_capacity(h.layers.len());
    let mut input = u.clone();
    let gamma = h.c_target.aperture;
    for layer in h.layers.iter_mut() {
        let y = rfc_step_mut(layer, &input)?.ok_or_else(|| {
            Error::DegenerateInput("hierarchy layer lost its readout".into())
        })?;
        if h.adapt {
            vector_ccl_step_mut(&mut layer.c_adapt, &layer.z, h.eta, gamma, h.beta, &h.c_target)?;
        }
        input = y.clone();
        outputs.push(y);
    }
    Ok(outputs)
}

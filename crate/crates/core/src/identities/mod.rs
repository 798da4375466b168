//! Residual verification of the curvature and variation identities.
//!
//! Every check evaluates one exact identity on a concrete
//! (anisotropy, surface) pair and reports residual magnitudes instead of
//! claiming proof; convergence runs at several stencil sizes separate
//! discretization error from genuine failure. All checks are deterministic
//! given the anisotropy, the surface, the quadrature order, and the seed.

mod divergence;
mod global;
mod local;
mod variation;

pub use divergence::{
    check_closed_integrals, check_divergence, divergence_residual, DivergenceForm,
};
pub use global::{
    degree_record, equilibrium_record, isoperimetric_ratio, isoperimetric_record,
    IsoperimetricSummary,
};
pub use local::{
    check_jacobi_of_gamma, check_rotation_conjugation, conjugation_residual, jacobi_residual,
    random_pair, spectral_gap,
};
pub use variation::{
    check_first_variation, expansion_fit, expansion_record, second_variation,
    second_variation_record, ExpansionFit, SecondVariation,
};

use crate::anisotropy::Anisotropy;
use crate::report::{ReportMeta, VerificationReport};
use crate::surface::PiecewiseSurface;

/// Inputs shared by every check.
pub struct CheckContext<'a> {
    pub gamma: &'a Anisotropy,
    pub surface: &'a PiecewiseSurface,
    /// Surface label for report metadata.
    pub surface_name: String,
    pub order: usize,
    pub seed: u64,
    /// Multiplies every tolerance; 1 keeps the defaults.
    pub tolerance_scale: f64,
    /// Wulff shape energy for the same anisotropy, when available.
    pub wulff_energy: Option<f64>,
}

impl<'a> CheckContext<'a> {
    pub fn new(
        gamma: &'a Anisotropy,
        surface: &'a PiecewiseSurface,
        surface_name: impl Into<String>,
    ) -> Self {
        CheckContext {
            gamma,
            surface,
            surface_name: surface_name.into(),
            order: 32,
            seed: 0,
            tolerance_scale: 1.0,
            wulff_energy: None,
        }
    }

    /// Fills in the Wulff reference energy when the family admits a
    /// parametric Wulff surface.
    pub fn with_wulff_reference(mut self) -> Self {
        self.wulff_energy = crate::wulff::wulff_surface(self.gamma)
            .map(|w| w.energy(self.gamma, self.order));
        self
    }
}

/// Deterministic interior sample grid, inset from each patch boundary by
/// `inset` times the span in each direction.
pub fn interior_samples(
    surface: &PiecewiseSurface,
    per_patch: usize,
    inset: f64,
) -> Vec<(usize, f64, f64)> {
    let k = (per_patch as f64).sqrt().ceil().max(1.0) as usize;
    let mut out = Vec::new();
    for (idx, patch) in surface.patches.iter().enumerate() {
        let (s0, s1) = patch.s_range;
        let (t0, t1) = patch.t_range;
        let ms = inset * (s1 - s0);
        let mt = inset * (t1 - t0);
        for i in 0..k {
            let s = s0 + ms + (s1 - s0 - 2.0 * ms) * (i as f64 + 0.5) / k as f64;
            for j in 0..k {
                let t = t0 + mt + (t1 - t0 - 2.0 * mt) * (j as f64 + 0.5) / k as f64;
                out.push((idx, s, t));
            }
        }
    }
    out
}

/// Runs every check applicable to the context's surface and merges the
/// records, sorted by name, into one report.
pub fn run_all(ctx: &CheckContext) -> VerificationReport {
    let mut report = VerificationReport::new(ReportMeta {
        gamma: ctx.gamma.name().to_string(),
        surface: ctx.surface_name.clone(),
        quadrature_order: ctx.order,
        seed: ctx.seed,
    });
    let mut records = vec![
        check_rotation_conjugation(ctx),
        check_jacobi_of_gamma(ctx),
        check_divergence(ctx, DivergenceForm::Support),
        check_divergence(ctx, DivergenceForm::Curvature),
        equilibrium_record(ctx),
        check_first_variation(ctx),
    ];
    if ctx.surface.closed {
        let (i1, i2) = check_closed_integrals(ctx);
        records.push(i1);
        records.push(i2);
        records.push(expansion_record(ctx));
        records.push(second_variation_record(ctx));
        records.push(isoperimetric_record(ctx));
        records.push(degree_record(ctx));
    }
    for record in records {
        report.push(record).expect("check names are unique");
    }
    report.finalize()
}

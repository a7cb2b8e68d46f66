//! Perturbative, small-rotation and exact excited-state populations on a τ grid.

use std::io::{self, Write};

use ion_nmpm::closed_form::{
    first_order_fock_excited, first_order_fock_ground, small_rotation_pe, CoefficientSet, CoherentExcitedSolution,
};
use ion_nmpm::ion::{split_high_intensity, ExactEvolution};
use ion_nmpm::nmpm::{assemble_state, corrections_block_matrix_grid};
use ion_nmpm::report::fmt_e12;
use ion_nmpm::{FockSpinState, InitialStateSpec, IonParams, Result, TimeGrid, TruncationConfig};

pub const CSV_HEADER: &str = "tau,pe_pert,pe_small_rot,pe_exact,err_pert_exact,err_pert_smallrot,norm_defect";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub tau: f64,
    pub pe_pert: f64,
    /// NaN for initial states the small-rotation formula does not cover.
    pub pe_small_rot: f64,
    pub pe_exact: f64,
    pub err_pert_exact: f64,
    pub err_pert_smallrot: f64,
    /// |‖ψ_pert‖ − 1| of the normalized perturbative state.
    pub norm_defect: f64,
}

impl ComparisonRow {
    pub fn new(tau: f64, pe_pert: f64, pe_small_rot: f64, pe_exact: f64, norm_defect: f64) -> Self {
        Self {
            tau,
            pe_pert,
            pe_small_rot,
            pe_exact,
            err_pert_exact: (pe_pert - pe_exact).abs(),
            err_pert_smallrot: (pe_pert - pe_small_rot).abs(),
            norm_defect,
        }
    }

    pub fn csv_fields(&self) -> String {
        [
            self.tau,
            self.pe_pert,
            self.pe_small_rot,
            self.pe_exact,
            self.err_pert_exact,
            self.err_pert_smallrot,
            self.norm_defect,
        ]
        .map(fmt_e12)
        .join(",")
    }
}

pub fn write_rows<W: Write>(mut out: W, rows: &[ComparisonRow]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_fields())?;
    }
    Ok(())
}

/// Shared state for evaluating rows of one coherent-state parameter point.
pub struct CoherentPoint {
    pub params: IonParams,
    pub alpha: f64,
    pub order: usize,
    solution: CoherentExcitedSolution,
    exact: ExactEvolution,
    psi0: FockSpinState,
}

impl CoherentPoint {
    pub fn new(params: IonParams, alpha: f64, order: usize, trunc: TruncationConfig) -> Result<Self> {
        let solution = CoherentExcitedSolution::new(alpha, params.eta(), trunc)?;
        let exact = ExactEvolution::new(&params, trunc)?;
        let psi0 = InitialStateSpec::CoherentExcited { alpha }.build(trunc)?;
        Ok(Self { params, alpha, order, solution, exact, psi0 })
    }

    pub fn row(&self, tau: f64) -> Result<ComparisonRow> {
        let exact = self.exact.evolve_to(&self.psi0, tau)?;
        self.row_with_exact(tau, &exact)
    }

    pub fn rows(&self, grid: &TimeGrid) -> Result<Vec<ComparisonRow>> {
        let exact = self.exact.evolve(&self.psi0, grid)?;
        grid.taus().iter().zip(&exact).map(|(&tau, psi)| self.row_with_exact(tau, psi)).collect()
    }

    fn row_with_exact(&self, tau: f64, exact: &FockSpinState) -> Result<ComparisonRow> {
        let p = &self.params;
        let u = self.solution.unnormalized(p.lambda(), p.kappa(), tau, self.order, CoefficientSet::Corrected);
        let state = u.normalized()?;
        let pe_small = small_rotation_pe(self.alpha, p.eta(), p.lambda(), tau);
        Ok(ComparisonRow::new(
            tau,
            state.excited_population(),
            pe_small,
            exact.excited_population(),
            (state.norm() - 1.0).abs(),
        ))
    }
}

/// Rows for any supported initial state.
///
/// Coherent states use the closed forms; number states use the first-order
/// closed forms, or the block-matrix engine stepped along the grid at order 2.
pub fn evolve_rows(
    params: IonParams,
    initial: InitialStateSpec,
    order: usize,
    trunc: TruncationConfig,
    grid: &TimeGrid,
) -> Result<Vec<ComparisonRow>> {
    let (n, excited) = match initial {
        InitialStateSpec::CoherentExcited { alpha } => {
            return CoherentPoint::new(params, alpha, order, trunc)?.rows(grid);
        }
        InitialStateSpec::FockGround { n } => (n, false),
        InitialStateSpec::FockExcited { n } => (n, true),
    };
    let psi0 = initial.build(trunc)?;
    let exact = ExactEvolution::new(&params, trunc)?.evolve(&psi0, grid)?;
    let pert: Vec<FockSpinState> = if order == 1 {
        grid.taus()
            .iter()
            .map(|&tau| {
                let r = if excited {
                    first_order_fock_excited(&params, n, tau, trunc)?
                } else {
                    first_order_fock_ground(&params, n, tau, trunc)?
                };
                Ok(r.state)
            })
            .collect::<Result<_>>()?
    } else {
        let (h0, hp) = split_high_intensity(&params, trunc);
        corrections_block_matrix_grid(&h0, &hp, &psi0, grid, order, params.lambda())?
            .iter()
            .map(assemble_state)
            .collect::<Result<_>>()?
    };
    Ok(grid
        .taus()
        .iter()
        .zip(pert.iter().zip(&exact))
        .map(|(&tau, (s, e))| {
            ComparisonRow::new(tau, s.excited_population(), f64::NAN, e.excited_population(), (s.norm() - 1.0).abs())
        })
        .collect())
}

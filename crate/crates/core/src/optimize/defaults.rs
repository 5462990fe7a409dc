//! Per-ansatz training defaults: Adam learning-rate schedules and ITES step budgets.

use super::{AdamConfig, Schedule};
use crate::ansatz::Variant;

pub fn table_schedule(variant: &Variant) -> Schedule {
    match variant {
        Variant::Peps { .. } => Schedule::constant(8e-3),
        Variant::Mps { .. } => Schedule::exp_halving(3e-3, 1000),
        Variant::Nqs { .. } => Schedule::warm_then_constant(1e-3, 200, 800),
        Variant::Vqe { .. } => Schedule::exp_halving(1e-2, 2000),
        Variant::Vec => Schedule::constant(2e-3),
    }
}

pub fn table_adam(variant: &Variant) -> AdamConfig {
    AdamConfig::new(table_schedule(variant))
}

/// Training steps for an ITES target.
pub fn table_ites_steps(variant: &Variant) -> u64 {
    match variant {
        Variant::Peps { .. } => 600,
        Variant::Mps { .. } => 400,
        Variant::Nqs { .. } => 3500,
        Variant::Vqe { .. } => 2000,
        Variant::Vec => 600,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows() {
        let mps = table_adam(&Variant::Mps { chi: 8 });
        assert_eq!(mps.schedule.lr_at(0), 3e-3);
        assert_eq!(mps.schedule.lr_at(1000), 1.5e-3);
        assert_eq!((mps.beta1, mps.beta2, mps.eps), (0.9, 0.999, 1e-8));
        assert_eq!(table_schedule(&Variant::Nqs { width: 4, depth: 2 }).lr_at(5000), 1e-3 / 16.0);
        assert_eq!(table_schedule(&Variant::Vqe { depth: 2 }).lr_at(2000), 5e-3);
        assert_eq!(table_schedule(&Variant::Peps { chi: 2 }).lr_at(10_000), 8e-3);
        assert_eq!(table_schedule(&Variant::Vec).lr_at(10_000), 2e-3);
        assert_eq!(table_ites_steps(&Variant::Vec), 600);
        assert_eq!(table_ites_steps(&Variant::Nqs { width: 1, depth: 1 }), 3500);
    }
}

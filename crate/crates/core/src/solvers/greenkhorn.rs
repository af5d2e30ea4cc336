//! Exact block minimization of the dual over one of `u`, `v` or `w`.
//!
//! ```text
//! u ← u + log r − log(B1 + e^u)
//! v ← v + log c − log(Bᵀ1 + e^v)
//! w ← w + log s − log ‖B‖₁
//! ```
//!
//! Each update zeroes the corresponding block of the gradient and lowers φ
//! by exactly the matching ρ-divergence.

use ndarray::Zip;
use serde::Serialize;

use crate::config::BlockRule;
use crate::dual::{column_sums, rho_sum, rho_unchecked, DualPoint, EntropicContext, Evaluation};
use crate::error::{Error, Result};

use super::all_positive;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Block {
    U,
    V,
    W,
}

/// Picks the block to update. `counter` drives the round-robin rule.
pub fn select_block(ctx: &EntropicContext, eval: &Evaluation, rule: BlockRule, counter: usize) -> Result<Block> {
    match rule {
        BlockRule::RoundRobin => Ok([Block::U, Block::V, Block::W][counter % 3]),
        BlockRule::Greedy => {
            if eval.mass <= 0.0 {
                return Err(Error::MassUnderflow);
            }
            let inst = ctx.instance();
            let gains = [
                (Block::U, rho_sum(inst.r(), &eval.row_marginal())),
                (Block::V, rho_sum(inst.c(), &eval.col_marginal())),
                (Block::W, rho_unchecked(inst.budget(), eval.mass)),
            ];
            let mut best = gains[0];
            for g in &gains[1..] {
                if g.1 > best.1 {
                    best = *g;
                }
            }
            Ok(best.0)
        }
    }
}

/// Applies one block update to an existing evaluation, rescaling `B` in
/// place of a fresh exponentiation.
pub fn greenkhorn_update(
    ctx: &EntropicContext,
    eval: &Evaluation,
    rule: BlockRule,
    counter: usize,
) -> Result<(Block, Evaluation)> {
    let inst = ctx.instance();
    if !(all_positive(inst.r()) && all_positive(inst.c()) && inst.budget() > 0.0) {
        return Err(Error::NonPositiveMarginal);
    }
    let block = select_block(ctx, eval, rule, counter)?;
    let mut next = eval.clone();
    match block {
        Block::U => {
            let factors = Zip::from(inst.r())
                .and(&eval.row_sums)
                .and(&eval.exp_u)
                .map_collect(|&r, &rs, &eu| r / (rs + eu));
            Zip::from(&mut next.point.u)
                .and(inst.r())
                .and(&eval.row_sums)
                .and(&eval.exp_u)
                .for_each(|u, &r, &rs, &eu| *u += r.ln() - (rs + eu).ln());
            for ((mut row, rs), &f) in next.b.rows_mut().into_iter().zip(&mut next.row_sums).zip(&factors) {
                row *= f;
                *rs *= f;
            }
            next.exp_u = next.point.u.mapv(f64::exp);
            next.col_sums = column_sums(&next.b);
        }
        Block::V => {
            let factors = Zip::from(inst.c())
                .and(&eval.col_sums)
                .and(&eval.exp_v)
                .map_collect(|&c, &cs, &ev| c / (cs + ev));
            Zip::from(&mut next.point.v)
                .and(inst.c())
                .and(&eval.col_sums)
                .and(&eval.exp_v)
                .for_each(|v, &c, &cs, &ev| *v += c.ln() - (cs + ev).ln());
            let f = factors.as_slice().expect("contiguous");
            for (mut row, rs) in next.b.rows_mut().into_iter().zip(&mut next.row_sums) {
                let row = row.as_slice_mut().expect("standard layout");
                let mut sum = 0.0;
                for (x, &fj) in row.iter_mut().zip(f) {
                    *x *= fj;
                    sum += *x;
                }
                *rs = sum;
            }
            next.exp_v = next.point.v.mapv(f64::exp);
            next.col_sums = &eval.col_sums * &factors;
        }
        Block::W => {
            if eval.mass <= 0.0 {
                return Err(Error::MassUnderflow);
            }
            let s = inst.budget();
            let f = s / eval.mass;
            next.point.w += s.ln() - eval.mass.ln();
            next.b *= f;
            next.row_sums *= f;
            next.col_sums *= f;
        }
    }
    next.mass = next.row_sums.sum();
    if !next.point.is_finite() {
        return Err(Error::NonFiniteDual);
    }
    Ok((block, next))
}

/// One Greenkhorn step from scratch.
pub fn greenkhorn_step(ctx: &EntropicContext, z: &DualPoint, rule: BlockRule, counter: usize) -> Result<DualPoint> {
    let eval = ctx.evaluate(z)?;
    let (_, next) = greenkhorn_update(ctx, &eval, rule, counter)?;
    Ok(next.point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::dual_objective;
    use crate::problem::PotInstance;
    use ndarray::{array, Array1, Array2};

    fn unit_ctx() -> EntropicContext {
        let inst = PotInstance::new(array![1.0], array![1.0], array![[0.0]], 0.5).unwrap();
        EntropicContext::new(inst, 1.0).unwrap()
    }

    #[test]
    fn u_block_scalar() {
        let z = greenkhorn_step(&unit_ctx(), &DualPoint::zeros(1, 1), BlockRule::RoundRobin, 0).unwrap();
        assert!((z.u[0] + 2f64.ln()).abs() < 1e-15);
        assert_eq!(z.v[0], 0.0);
        assert_eq!(z.w, 0.0);
    }

    #[test]
    fn w_block_scalar() {
        let z = greenkhorn_step(&unit_ctx(), &DualPoint::zeros(1, 1), BlockRule::RoundRobin, 2).unwrap();
        assert!((z.w + 2f64.ln()).abs() < 1e-15);
        assert_eq!(z.u[0], 0.0);
    }

    #[test]
    fn stationary_block_is_unchanged() {
        let ctx = unit_ctx();
        let once = greenkhorn_step(&ctx, &DualPoint::zeros(1, 1), BlockRule::RoundRobin, 0).unwrap();
        let twice = greenkhorn_step(&ctx, &once, BlockRule::RoundRobin, 3).unwrap();
        assert!((once.u[0] - twice.u[0]).abs() < 1e-15);
    }

    #[test]
    fn update_zeroes_the_block_gradient() {
        let inst = PotInstance::new(
            array![0.3, 0.2, 0.4],
            array![0.1, 0.5, 0.2],
            array![[0.0, 0.4, 1.0], [0.3, 0.0, 0.6], [0.9, 0.2, 0.0]],
            0.25,
        )
        .unwrap();
        let ctx = EntropicContext::new(inst.clone(), 0.3).unwrap();
        let z = DualPoint { u: array![0.1, -0.4, 0.3], v: array![-0.2, 0.0, 0.5], w: 0.2 };
        let eval = ctx.evaluate(&z).unwrap();
        for (counter, block) in [(0, Block::U), (1, Block::V), (2, Block::W)] {
            let (got, next) = greenkhorn_update(&ctx, &eval, BlockRule::RoundRobin, counter).unwrap();
            assert_eq!(got, block);
            let fresh = ctx.evaluate(&next.point).unwrap();
            let g = fresh.gradient(&inst);
            let part = match block {
                Block::U => g.u.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                Block::V => g.v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                Block::W => g.w.abs(),
            };
            assert!(part < 1e-14, "{block:?}: {part}");
            // The rescaled matrix matches a fresh evaluation.
            let diff = (&fresh.b - &next.b).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(diff < 1e-14);
            assert!((fresh.mass - next.mass).abs() < 1e-14);
            assert!(dual_objective(&ctx, &next.point).unwrap() <= eval.phi(&inst) + 1e-15);
        }
    }

    #[test]
    fn greedy_picks_largest_divergence() {
        // Rows and columns already match; only the mass is off.
        let inst = PotInstance::new(array![2.0], array![2.0], array![[0.0]], 0.5).unwrap();
        let ctx = EntropicContext::new(inst, 1.0).unwrap();
        let eval = ctx.evaluate(&DualPoint::zeros(1, 1)).unwrap();
        assert_eq!(select_block(&ctx, &eval, BlockRule::Greedy, 0).unwrap(), Block::W);
    }

    #[test]
    fn requires_positive_marginals() {
        let inst = PotInstance::new(array![0.0, 1.0], array![0.5, 0.5], Array2::zeros((2, 2)), 0.5).unwrap();
        let ctx = EntropicContext::new(inst, 1.0).unwrap();
        assert!(matches!(
            greenkhorn_step(&ctx, &DualPoint::zeros(2, 2), BlockRule::Greedy, 0),
            Err(Error::NonPositiveMarginal)
        ));
        let _ = Array1::<f64>::zeros(0);
    }
}

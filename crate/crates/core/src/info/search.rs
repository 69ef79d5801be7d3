//! Exhaustive grid search over auxiliary laws and deterministic maps.

use super::law::{ConditionalLaw, GpChannel, GpLaw, WzLaw, WzSource};
use super::measures::{gp_objective, wz_objective, WzObjective};
use crate::error::{Error, Result};

/// Default cap on the number of (auxiliary law, map) pairs evaluated.
pub const DEFAULT_SEARCH_BUDGET: u128 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    pub aux_size: usize,
    pub budget: u128,
}

impl GridSpec {
    pub fn new(step: f64, aux_size: usize) -> Self {
        GridSpec {
            step,
            aux_size,
            budget: DEFAULT_SEARCH_BUDGET,
        }
    }

    fn resolution(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::param("grid_step", "must lie in (0, 1]"));
        }
        if self.aux_size == 0 {
            return Err(Error::param("aux_size", "must be positive"));
        }
        Ok((1.0 / self.step).round() as usize)
    }
}

/// Compositions of `total` into `parts` non-negative integers, in lex order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

fn binomial_f(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Grid of probability rows with entries `k / K`, plus the uniform row if it
/// is not already on the grid.
fn grid_rows(resolution: usize, size: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = compositions(resolution, size)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect();
    if !resolution.is_multiple_of(size) {
        rows.push(vec![1.0 / size as f64; size]);
    }
    rows
}

/// Iterate over every table of `conditions` rows drawn from `rows`.
fn for_each_table(rows: &[Vec<f64>], conditions: usize, mut f: impl FnMut(&[usize])) {
    let mut pick = vec![0usize; conditions];
    loop {
        f(&pick);
        let mut i = conditions;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < rows.len() {
                break;
            }
            pick[i] = 0;
        }
    }
}

/// All maps `[u][c] -> 0..range` as mixed-radix counters.
fn all_maps(aux: usize, cond: usize, range: usize) -> Vec<Vec<Vec<usize>>> {
    let cells = aux * cond;
    let total = range.pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut flat = vec![0usize; cells];
            for v in flat.iter_mut().rev() {
                *v = code % range;
                code /= range;
            }
            flat.chunks(cond).map(<[usize]>::to_vec).collect()
        })
        .collect()
}

fn check_budget(rows: usize, conditions: usize, maps: u128, budget: u128) -> Result<()> {
    let tables = (rows as u128).checked_pow(conditions as u32).unwrap_or(u128::MAX);
    let needed = tables.saturating_mul(maps);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, limit: budget });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpOptimum {
    pub law: GpLaw,
    pub objective: f64,
    pub evaluated: u128,
}

/// Maximize `I(U;Y) - I(U;S)` over gridded `p(u|s)` and every map `f(u, s)`.
pub fn search_gp(channel: &GpChannel, grid: &GridSpec) -> Result<GpOptimum> {
    let k = grid.resolution()?;
    let (nu, ns, nx) = (grid.aux_size, channel.num_states(), channel.num_inputs());
    let row_count = binomial_f(k + nu - 1, nu - 1) as usize + 1;
    let map_count = (nx as u128).checked_pow((nu * ns) as u32).unwrap_or(u128::MAX);
    check_budget(row_count, ns, map_count, grid.budget)?;

    let rows = grid_rows(k, nu);
    let maps = all_maps(nu, ns, nx);
    let mut best: Option<GpOptimum> = None;
    let mut evaluated = 0u128;
    for_each_table(&rows, ns, |pick| {
        let aux =
            ConditionalLaw::new(pick.iter().map(|&i| rows[i].clone()).collect()).expect("grid rows are stochastic");
        for map in &maps {
            let law = GpLaw::new(channel.clone(), aux.clone(), map.clone()).expect("shapes agree");
            let obj = gp_objective(&law);
            evaluated += 1;
            if best.as_ref().is_none_or(|b| obj > b.objective + 1e-15) {
                best = Some(GpOptimum {
                    law,
                    objective: obj,
                    evaluated: 0,
                });
            }
        }
    });
    let mut best = best.expect("grid is non-empty");
    best.evaluated = evaluated;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzOptimum {
    pub law: WzLaw,
    pub objective: WzObjective,
    pub evaluated: u128,
}

/// Minimize `I(U;X) - I(U;Y)` subject to `E rho <= max_distortion`, over
/// gridded `p(u|x)` and every map `f(u, y)`. Ties in rate go to lower
/// distortion.
pub fn search_wz(source: &WzSource, max_distortion: f64, grid: &GridSpec) -> Result<WzOptimum> {
    let k = grid.resolution()?;
    let (nu, nx, ny, nh) = (
        grid.aux_size,
        source.num_source(),
        source.num_side(),
        source.num_reconstruction(),
    );
    let row_count = binomial_f(k + nu - 1, nu - 1) as usize + 1;
    let map_count = (nh as u128).checked_pow((nu * ny) as u32).unwrap_or(u128::MAX);
    check_budget(row_count, nx, map_count, grid.budget)?;

    let rows = grid_rows(k, nu);
    let maps = all_maps(nu, ny, nh);
    let mut best: Option<WzOptimum> = None;
    let mut evaluated = 0u128;
    for_each_table(&rows, nx, |pick| {
        let aux =
            ConditionalLaw::new(pick.iter().map(|&i| rows[i].clone()).collect()).expect("grid rows are stochastic");
        for map in &maps {
            let law = WzLaw::new(source.clone(), aux.clone(), map.clone()).expect("shapes agree");
            let obj = wz_objective(&law);
            evaluated += 1;
            if obj.distortion > max_distortion + 1e-12 {
                continue;
            }
            let better = best.as_ref().is_none_or(|b| {
                obj.rate < b.objective.rate - 1e-15
                    || (obj.rate <= b.objective.rate + 1e-15 && obj.distortion < b.objective.distortion - 1e-15)
            });
            if better {
                best = Some(WzOptimum {
                    law,
                    objective: obj,
                    evaluated: 0,
                });
            }
        }
    });
    let mut best = best.ok_or_else(|| Error::param("max_distortion", "no grid point meets the distortion target"))?;
    best.evaluated = evaluated;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::measures::gp_objective;

    fn noiseless_stateless() -> GpChannel {
        let transition = (0..2)
            .map(|x| {
                (0..2)
                    .map(|_| if x == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
                    .collect()
            })
            .collect();
        GpChannel::new(vec![0.5, 0.5], transition).unwrap()
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(10, 2).len(), 11);
        assert_eq!(compositions(4, 3).len(), 15);
    }

    #[test]
    fn noiseless_channel_reaches_log_alphabet() {
        let best = search_gp(&noiseless_stateless(), &GridSpec::new(0.1, 2)).unwrap();
        assert!((best.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn additive_state_beats_hand_constructed_points() {
        let ch = GpChannel::binary_additive(0.5, 0.05).unwrap();
        let best = search_gp(&ch, &GridSpec::new(0.1, 2)).unwrap();
        let hand = [
            (vec![vec![0.5, 0.5]; 2], vec![vec![0, 1], vec![1, 0]]),
            (vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![vec![0, 0], vec![1, 1]]),
            (vec![vec![0.7, 0.3], vec![0.3, 0.7]], vec![vec![0, 1], vec![1, 0]]),
        ];
        for (aux, map) in hand {
            let law = GpLaw::new(ch.clone(), ConditionalLaw::new(aux).unwrap(), map).unwrap();
            assert!(best.objective >= gp_objective(&law) - 1e-12);
        }
        let cap = 1.0 - crate::info::measures::binary_entropy(0.05);
        assert!((best.objective - cap).abs() < 1e-9);
    }

    #[test]
    fn refined_grid_never_worse() {
        let ch = GpChannel::new(
            vec![0.3, 0.7],
            vec![
                vec![vec![0.8, 0.2], vec![0.4, 0.6]],
                vec![vec![0.1, 0.9], vec![0.7, 0.3]],
            ],
        )
        .unwrap();
        let coarse = search_gp(&ch, &GridSpec::new(0.1, 2)).unwrap();
        let fine = search_gp(&ch, &GridSpec::new(0.05, 2)).unwrap();
        assert!(fine.objective >= coarse.objective - 1e-12);
    }

    #[test]
    fn never_below_uniform_baseline() {
        let ch = GpChannel::new(
            vec![0.6, 0.4],
            vec![
                vec![vec![0.9, 0.1], vec![0.3, 0.7]],
                vec![vec![0.2, 0.8], vec![0.6, 0.4]],
            ],
        )
        .unwrap();
        // step 0.3 does not land on 1/2; the uniform row is added explicitly
        for step in [0.1, 0.3] {
            let best = search_gp(&ch, &GridSpec::new(step, 2)).unwrap();
            for map in all_maps(2, 2, 2) {
                let law = GpLaw::new(ch.clone(), ConditionalLaw::new(vec![vec![0.5, 0.5]; 2]).unwrap(), map).unwrap();
                assert!(best.objective >= gp_objective(&law) - 1e-12);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mut g = GridSpec::new(0.01, 4);
        g.budget = 1000;
        assert!(matches!(
            search_gp(&GpChannel::binary_additive(0.5, 0.1).unwrap(), &g),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn wz_search_finds_low_rate_point() {
        let src = WzSource::doubly_symmetric(0.25).unwrap();
        let best = search_wz(&src, 0.1, &GridSpec::new(0.05, 2)).unwrap();
        assert!(best.objective.distortion <= 0.1 + 1e-12);
        // the symmetric test channel with 0.1 flips is feasible
        let hand = WzLaw::new(
            src,
            ConditionalLaw::binary_symmetric(0.1).unwrap(),
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap();
        assert!(best.objective.rate <= wz_objective(&hand).rate + 1e-12);
    }
}

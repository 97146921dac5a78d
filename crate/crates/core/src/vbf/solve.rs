use std::cmp::Ordering;

use rayon::prelude::*;

use super::{PowerBudget, VbfError, VbfProblem, VbfSolution};

/// Largest instance `solve_exact` will enumerate.
pub const EXACT_MAX_FRAMES: usize = 24;

const BNB_NODE_LIMIT: u64 = 20_000_000;

/// Frame data the solvers work on: (score, p_min, id) per frame.
struct Items {
    score: Vec<f64>,
    power: Vec<f64>,
    id: Vec<u32>,
    budget: PowerBudget,
}

impl Items {
    fn new(problem: &VbfProblem) -> Result<Self, VbfError> {
        problem.validate()?;
        Ok(Self {
            power: problem.min_powers()?,
            score: problem.frames.iter().map(|f| f.score).collect(),
            id: problem.frames.iter().map(|f| f.id).collect(),
            budget: problem.power_budget,
        })
    }

    fn len(&self) -> usize {
        self.id.len()
    }

    fn fits_alone(&self, i: usize) -> bool {
        self.power[i] <= self.budget.limit()
    }

    fn solution(&self, picked: &[usize]) -> VbfSolution {
        let mut idx = picked.to_vec();
        idx.sort_by_key(|&i| self.id[i]);
        VbfSolution {
            selected: idx.iter().map(|&i| self.id[i]).collect(),
            powers: idx.iter().map(|&i| self.power[i]).collect(),
            total_score: idx.iter().map(|&i| self.score[i]).sum(),
            total_power: idx.iter().map(|&i| self.power[i]).sum(),
        }
    }

    /// Indices by decreasing score per watt, lower id first on ties.
    fn by_density(&self, positive_only: bool) -> Vec<usize> {
        let mut order: Vec<usize> =
            (0..self.len()).filter(|&i| self.fits_alone(i) && (!positive_only || self.score[i] > 0.0)).collect();
        order.sort_by(|&a, &b| {
            (self.score[b] / self.power[b])
                .total_cmp(&(self.score[a] / self.power[a]))
                .then(self.id[a].cmp(&self.id[b]))
        });
        order
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    mask: u32,
    score: f64,
    power: f64,
}

/// Higher score, then lower power, then the lexicographically smaller sorted
/// id list.
fn better(items: &Items, a: &Candidate, b: &Candidate) -> bool {
    match a.score.total_cmp(&b.score) {
        Ordering::Greater => return true,
        Ordering::Less => return false,
        Ordering::Equal => {}
    }
    match a.power.total_cmp(&b.power) {
        Ordering::Less => return true,
        Ordering::Greater => return false,
        Ordering::Equal => {}
    }
    let ids = |m: u32| {
        let mut v: Vec<u32> = (0..items.len()).filter(|&i| m >> i & 1 == 1).map(|i| items.id[i]).collect();
        v.sort_unstable();
        v
    };
    ids(a.mask) < ids(b.mask)
}

/// Enumerates every subset. Ties on score go to the lower total power, then
/// to the lexicographically smallest sorted id list.
pub fn solve_exact(problem: &VbfProblem) -> Result<VbfSolution, VbfError> {
    if problem.frames.len() > EXACT_MAX_FRAMES {
        return Err(VbfError::TooManyFramesForExact { got: problem.frames.len(), max: EXACT_MAX_FRAMES });
    }
    let items = Items::new(problem)?;
    let n = items.len();
    let limit = items.budget.limit();
    let per_frame = matches!(items.budget, PowerBudget::PerFrame(_));

    let eval = |mask: u32| -> Option<Candidate> {
        let (mut score, mut power) = (0.0, 0.0);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                if per_frame && !items.fits_alone(i) {
                    return None;
                }
                score += items.score[i];
                power += items.power[i];
            }
        }
        (per_frame || power <= limit).then_some(Candidate { mask, score, power })
    };
    let pick = |a: Candidate, b: Candidate| if better(&items, &b, &a) { b } else { a };

    let total: u64 = 1 << n;
    let chunk: u64 = 1 << 14;
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut best: Option<Candidate> = None;
            for mask in c * chunk..((c + 1) * chunk).min(total) {
                if let Some(cand) = eval(mask as u32) {
                    best = Some(best.map_or(cand, |b| pick(b, cand)));
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .reduce(pick)
        .expect("the empty set is always feasible");
    let picked: Vec<usize> = (0..n).filter(|&i| best.mask >> i & 1 == 1).collect();
    Ok(items.solution(&picked))
}

/// Score-density greedy followed by one pass of 1-for-1 swaps and a refill.
pub fn solve_greedy(problem: &VbfProblem) -> Result<VbfSolution, VbfError> {
    let items = Items::new(problem)?;
    Ok(items.solution(&greedy(&items)))
}

fn greedy(items: &Items) -> Vec<usize> {
    let order = items.by_density(true);
    if let PowerBudget::PerFrame(_) = items.budget {
        return order;
    }
    let limit = items.budget.limit();
    let mut chosen = vec![false; items.len()];
    let mut used = 0.0;
    let fill = |chosen: &mut Vec<bool>, used: &mut f64| {
        for &i in &order {
            if !chosen[i] && *used + items.power[i] <= limit {
                chosen[i] = true;
                *used += items.power[i];
            }
        }
    };
    fill(&mut chosen, &mut used);

    for &j in &order {
        if chosen[j] {
            continue;
        }
        let mut swap: Option<(usize, f64)> = None;
        for &i in &order {
            if !chosen[i] || used - items.power[i] + items.power[j] > limit {
                continue;
            }
            let gain = items.score[j] - items.score[i];
            if gain > 0.0 && swap.is_none_or(|(_, g)| gain > g) {
                swap = Some((i, gain));
            }
        }
        if let Some((i, _)) = swap {
            chosen[i] = false;
            chosen[j] = true;
            used += items.power[j] - items.power[i];
        }
    }
    fill(&mut chosen, &mut used);
    (0..items.len()).filter(|&i| chosen[i]).collect()
}

/// Maximum number of frames under the budget, scores ignored: cheapest
/// frames first, lower id on ties.
pub fn solve_throughput(problem: &VbfProblem) -> Result<VbfSolution, VbfError> {
    let items = Items::new(problem)?;
    Ok(items.solution(&throughput(&items)))
}

fn throughput(items: &Items) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).filter(|&i| items.fits_alone(i)).collect();
    if let PowerBudget::PerFrame(_) = items.budget {
        return order;
    }
    order.sort_by(|&a, &b| items.power[a].total_cmp(&items.power[b]).then(items.id[a].cmp(&items.id[b])));
    let mut used = 0.0;
    order
        .into_iter()
        .take_while(|&i| {
            used += items.power[i];
            used <= items.budget.limit()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbOutcome {
    pub solution: VbfSolution,
    /// False when the node limit cut the search short; the solution is then
    /// the best found, never worse than greedy or throughput.
    pub proven_optimal: bool,
    pub nodes: u64,
}

/// Depth-first branch and bound over frames in density order, bounded by the
/// fractional relaxation. Handles instances too large to enumerate.
pub fn solve_branch_and_bound(problem: &VbfProblem) -> Result<BnbOutcome, VbfError> {
    let items = Items::new(problem)?;
    if let PowerBudget::PerFrame(_) = items.budget {
        // every positive frame that fits is independently optimal
        let picked = items.by_density(true);
        return Ok(BnbOutcome { solution: items.solution(&picked), proven_optimal: true, nodes: 0 });
    }
    let order = items.by_density(true);
    let score: Vec<f64> = order.iter().map(|&i| items.score[i]).collect();
    let power: Vec<f64> = order.iter().map(|&i| items.power[i]).collect();
    let limit = items.budget.limit();

    // incumbent: the better of greedy and throughput (zero-score frames dropped)
    let g = greedy(&items);
    let t: Vec<usize> = throughput(&items).into_iter().filter(|&i| items.score[i] > 0.0).collect();
    let sum = |v: &[usize]| v.iter().map(|&i| items.score[i]).sum::<f64>();
    let mut incumbent = if sum(&t) > sum(&g) { t } else { g };
    let mut best_score = sum(&incumbent);

    let bound = |k: usize, cap: f64, acc: f64| -> f64 {
        let mut b = acc;
        let mut room = cap;
        for m in k..order.len() {
            if power[m] <= room {
                room -= power[m];
                b += score[m];
            } else {
                return b + score[m] * room / power[m];
            }
        }
        b
    };

    let mut take = vec![false; order.len()];
    let mut nodes = 0u64;
    let mut complete = true;
    // explicit stack of (depth, remaining budget, accumulated score, branch)
    let mut stack: Vec<(usize, f64, f64, bool)> = vec![(0, limit, 0.0, true), (0, limit, 0.0, false)];
    stack.reverse();
    while let Some((k, cap, acc, with)) = stack.pop() {
        nodes += 1;
        if nodes > BNB_NODE_LIMIT {
            complete = false;
            break;
        }
        if k == order.len() {
            continue;
        }
        let (cap, acc) = if with {
            if power[k] > cap {
                continue;
            }
            (cap - power[k], acc + score[k])
        } else {
            (cap, acc)
        };
        take[k] = with;
        if acc > best_score {
            best_score = acc;
            incumbent = (0..=k).filter(|&m| take[m]).map(|m| order[m]).collect();
        }
        if k + 1 < order.len() && bound(k + 1, cap, acc) > best_score * (1.0 + 1e-12) {
            stack.push((k + 1, cap, acc, false));
            stack.push((k + 1, cap, acc, true));
        }
    }
    Ok(BnbOutcome { solution: items.solution(&incumbent), proven_optimal: complete, nodes })
}

/// Exact enumeration for small instances, branch and bound otherwise.
pub fn solve(problem: &VbfProblem) -> Result<VbfSolution, VbfError> {
    if problem.frames.len() <= EXACT_MAX_FRAMES {
        solve_exact(problem)
    } else {
        Ok(solve_branch_and_bound(problem)?.solution)
    }
}

use super::{
    Backend, Capabilities, Incumbent, LazyCut, LazyHandler, SolveOptions, SolveResult, SolveStats,
    SolveStatus, SolverError,
};
use crate::model::{Constraint, LinearModel, Sense};
use std::time::Instant;

const INTEGRALITY_TOL: f64 = 1e-6;

/// Depth-first LP-based branch-and-cut over an LP backend.
///
/// Integer-feasible points only ever come from node LP relaxations (there are no
/// primal heuristics), and each is offered to the lazy handler before it can
/// become the incumbent. Local cuts are attached to the node that produced the
/// rejected point and inherited by its children; global cuts go to a pool shared
/// by every node.
#[derive(Debug, Clone)]
pub struct BranchAndCut<B> {
    lp: B,
    pub max_nodes: u64,
}

impl<B: Backend> BranchAndCut<B> {
    pub fn new(lp: B) -> Self {
        BranchAndCut {
            lp,
            max_nodes: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// `(column, lower, upper)` bound overrides.
    bounds: Vec<(usize, f64, f64)>,
    local_cuts: Vec<Constraint>,
    depth: usize,
}

fn to_row(cut: &LazyCut) -> Constraint {
    Constraint {
        name: cut.name.clone(),
        lower: cut.lower,
        upper: cut.upper,
        terms: cut.terms.clone(),
    }
}

impl<B: Backend> BranchAndCut<B> {
    fn search(
        &self,
        model: &LinearModel,
        options: &SolveOptions,
        mut handler: Option<&mut dyn LazyHandler>,
    ) -> Result<SolveResult, SolverError> {
        let start = Instant::now();
        let mut relaxed = model.clone();
        relaxed.relax_integrality();
        let integer: Vec<usize> = (0..model.columns.len())
            .filter(|&j| model.columns[j].integer)
            .collect();
        let better = |a: f64, b: f64| match model.sense {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        };
        let lp_options = SolveOptions {
            mip_gap: 0.0,
            ..options.clone()
        };

        let mut global_cuts: Vec<Constraint> = Vec::new();
        let mut stack = vec![Node {
            bounds: Vec::new(),
            local_cuts: Vec::new(),
            depth: 0,
        }];
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut stats = SolveStats::default();
        let mut root_bound = f64::NAN;
        let mut hit_limit = false;

        while let Some(mut node) = stack.pop() {
            if options.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() > t)
                || stats.nodes >= self.max_nodes
            {
                hit_limit = true;
                break;
            }
            stats.nodes += 1;
            loop {
                let mut lp = relaxed.clone();
                for &(j, lo, hi) in &node.bounds {
                    lp.columns[j].lower = lo;
                    lp.columns[j].upper = hi;
                }
                lp.rows.extend(global_cuts.iter().cloned());
                lp.rows.extend(node.local_cuts.iter().cloned());
                let r = self.lp.solve(&lp, &lp_options)?;
                stats.simplex_iterations += r.stats.simplex_iterations;
                match r.status {
                    SolveStatus::Optimal => {}
                    SolveStatus::Infeasible => break,
                    SolveStatus::Unbounded => {
                        if node.depth == 0 && best.is_none() {
                            stats.wall_time_s = start.elapsed().as_secs_f64();
                            return Ok(SolveResult::without_point(SolveStatus::Unbounded, stats));
                        }
                        return Err(SolverError::Backend {
                            backend: self.lp.name(),
                            message: "unbounded node relaxation below the root".into(),
                        });
                    }
                    SolveStatus::Limit => {
                        hit_limit = true;
                        break;
                    }
                }
                if node.depth == 0 && node.local_cuts.is_empty() && root_bound.is_nan() {
                    root_bound = r.objective;
                }
                if let Some((_, inc)) = &best {
                    let slack = 1e-9 * inc.abs().max(1.0) + options.mip_gap * inc.abs();
                    let can_improve = match model.sense {
                        Sense::Maximize => r.objective > inc + slack,
                        Sense::Minimize => r.objective < inc - slack,
                    };
                    if !can_improve {
                        break;
                    }
                }

                let fractional = integer
                    .iter()
                    .map(|&j| (j, (r.primal[j] - r.primal[j].round()).abs()))
                    .filter(|(_, f)| *f > INTEGRALITY_TOL)
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((j, _)) = fractional {
                    let v = r.primal[j];
                    let col = &lp.columns[j];
                    let down = Node {
                        bounds: with_bound(&node.bounds, j, col.lower, v.floor()),
                        local_cuts: node.local_cuts.clone(),
                        depth: node.depth + 1,
                    };
                    let up = Node {
                        bounds: with_bound(&node.bounds, j, v.ceil(), col.upper),
                        local_cuts: std::mem::take(&mut node.local_cuts),
                        depth: node.depth + 1,
                    };
                    // Explore the nearer side first.
                    if v - v.floor() >= 0.5 {
                        stack.push(down);
                        stack.push(up);
                    } else {
                        stack.push(up);
                        stack.push(down);
                    }
                    break;
                }

                let mut values = r.primal.clone();
                for &j in &integer {
                    values[j] = values[j].round();
                }
                let objective = model.objective(&values);
                let cuts = match handler.as_deref_mut() {
                    Some(h) => h.on_incumbent(&Incumbent {
                        values: &values,
                        objective,
                        depth: node.depth,
                    })?,
                    None => Vec::new(),
                };
                if cuts.is_empty() {
                    if best.as_ref().is_none_or(|(_, inc)| better(objective, *inc)) {
                        best = Some((values, objective));
                    }
                    break;
                }
                for cut in &cuts {
                    if cut.violation(&values) <= 1e-9 {
                        return Err(SolverError::NonSeparatingCut(cut.name.clone()));
                    }
                    if cut.local {
                        node.local_cuts.push(to_row(cut));
                    } else {
                        global_cuts.push(to_row(cut));
                    }
                }
            }
        }

        stats.wall_time_s = start.elapsed().as_secs_f64();
        Ok(match best {
            Some((primal, objective)) => SolveResult {
                status: if hit_limit { SolveStatus::Limit } else { SolveStatus::Optimal },
                objective,
                best_bound: if hit_limit { root_bound } else { objective },
                primal,
                duals: None,
                stats,
            },
            None => SolveResult::without_point(
                if hit_limit { SolveStatus::Limit } else { SolveStatus::Infeasible },
                stats,
            ),
        })
    }
}

fn with_bound(bounds: &[(usize, f64, f64)], j: usize, lo: f64, hi: f64) -> Vec<(usize, f64, f64)> {
    let mut out: Vec<_> = bounds.iter().copied().filter(|(k, _, _)| *k != j).collect();
    out.push((j, lo, hi));
    out
}

impl<B: Backend> Backend for BranchAndCut<B> {
    fn name(&self) -> &'static str {
        "branch-and-cut"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_lazy_constraints: true,
            supports_local_cuts: true,
            supports_heuristics_toggle: true,
        }
    }

    fn solve(&self, model: &LinearModel, options: &SolveOptions) -> Result<SolveResult, SolverError> {
        if !model.is_mip() {
            return self.lp.solve(model, options);
        }
        self.search(model, options, None)
    }

    fn solve_with_lazy_handler(
        &self,
        model: &LinearModel,
        options: &SolveOptions,
        handler: &mut dyn LazyHandler,
    ) -> Result<SolveResult, SolverError> {
        self.search(model, options, Some(handler))
    }
}

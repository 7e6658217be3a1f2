use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::Vector3;

use super::quat::{self, Q};
use super::{GlobalState, LossBreakdown, LossWeights};
use crate::backbone::PairPrediction;
use crate::error::{Error, Result};
use crate::geom::{Intrinsics, MirrorPlane};
use crate::graph::{ViewId, ViewKind};

struct Term {
    edge: usize,
    view: usize,
    slot: usize,
    s: Vector3<f64>,
    o: f64,
}

struct Pose {
    raw: Q,
    q: Q,
    t: Vector3<f64>,
}

fn pose_at(x: &[f64], o: usize) -> Pose {
    let raw = [x[o], x[o + 1], x[o + 2], x[o + 3]];
    Pose {
        raw,
        q: quat::normalized(&raw),
        t: Vector3::new(x[o + 4], x[o + 5], x[o + 6]),
    }
}

const X_FLIP: Q = [0.0, 1.0, 0.0, 0.0];

fn flip3(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.x, v.y, v.z)
}

/// The loss over a fixed structure (views, slots, edges, predictions),
/// evaluated on flat parameter vectors.
pub(crate) struct Problem {
    pub(crate) n_views: usize,
    pub(crate) n_edges: usize,
    pub(crate) depth_offset: Vec<usize>,
    pub(crate) n_params: usize,
    rays: Vec<Vec<Vector3<f64>>>,
    terms: Vec<Term>,
    pub(crate) edge_ranges: Vec<Range<usize>>,
    pub(crate) pairs: Vec<(usize, usize, ViewId)>,
}

impl Problem {
    pub(crate) fn new(state: &GlobalState, preds: &[PairPrediction]) -> Result<Self> {
        let k: &Intrinsics = &state.intrinsics;
        let edge_ids: Vec<_> = state.edges.keys().copied().collect();
        let mut by_edge: Vec<Option<&PairPrediction>> = vec![None; edge_ids.len()];
        for p in preds {
            let e = edge_ids
                .binary_search(&p.edge)
                .map_err(|_| Error::ConfigError(format!("no parameters for edge {} - {}", p.edge.a, p.edge.b)))?;
            by_edge[e] = Some(p);
        }
        let mut terms = Vec::new();
        let mut edge_ranges = Vec::new();
        for (e, pred) in by_edge.iter().enumerate() {
            let start = terms.len();
            if let Some(p) = pred {
                for (v, map) in [(p.edge.a, &p.pointmap_a), (p.edge.b, &p.pointmap_b)] {
                    let view = state.view_index(v).ok_or_else(|| Error::UnknownView(v.to_string()))?;
                    for i in map.valid_indices() {
                        let slot = state.views[view]
                            .slot(i)
                            .ok_or_else(|| Error::ConfigError(format!("pixel {i} of {v} has no depth")))?;
                        terms.push(Term {
                            edge: e,
                            view,
                            slot,
                            s: map.points[i],
                            o: map.confidence[i],
                        });
                    }
                }
            }
            edge_ranges.push(start..terms.len());
        }
        let mut depth_offset = Vec::new();
        let mut o = 7 * state.views.len() + 8 * state.edges.len();
        for v in &state.views {
            depth_offset.push(o);
            o += v.depths.len();
        }
        let rays = state
            .views
            .iter()
            .map(|v| v.pixels.iter().map(|[u, w]| k.ray(*u, *w)).collect())
            .collect();
        let pairs = state
            .symmetric_pairs()
            .into_iter()
            .map(|(r, j)| (r, j, state.views[j].view))
            .collect();
        Ok(Problem {
            n_views: state.views.len(),
            n_edges: state.edges.len(),
            depth_offset,
            n_params: o,
            rays,
            terms,
            edge_ranges,
            pairs,
        })
    }

    pub(crate) fn edge_offset(&self, e: usize) -> usize {
        7 * self.n_views + 8 * e
    }

    fn target(&self, term: &Term, edges: &[(Pose, f64)]) -> Vector3<f64> {
        let (p, sigma) = &edges[term.edge];
        (quat::rotate(&p.q, &term.s) + p.t) * *sigma
    }

    fn decode(&self, x: &[f64]) -> (Vec<Pose>, Vec<(Pose, f64)>) {
        let views = (0..self.n_views).map(|v| pose_at(x, 7 * v)).collect();
        let edges = (0..self.n_edges)
            .map(|e| {
                let o = self.edge_offset(e);
                (pose_at(x, o), x[o + 7].exp())
            })
            .collect();
        (views, edges)
    }

    /// Loss at `x`; accumulates the gradient into `grad` when given.
    pub(crate) fn eval(
        &self,
        x: &[f64],
        planes: &BTreeMap<ViewId, MirrorPlane>,
        w: &LossWeights,
        grad: Option<&mut [f64]>,
    ) -> Result<LossBreakdown> {
        self.eval_full(x, planes, w, 0.0, grad, None)
    }

    /// Loss with the pairwise norm smoothed to `sqrt(|r|² + eps²) − eps`.
    /// `diag` receives a diagonal curvature estimate: Gauss-Newton on the
    /// reweighted pairwise terms plus the symmetry terms' curvature.
    pub(crate) fn eval_full(
        &self,
        x: &[f64],
        planes: &BTreeMap<ViewId, MirrorPlane>,
        w: &LossWeights,
        eps: f64,
        mut grad: Option<&mut [f64]>,
        mut diag: Option<&mut [f64]>,
    ) -> Result<LossBreakdown> {
        let (views, edges) = self.decode(x);
        let want = grad.is_some();
        let mut gq_view = vec![[0.0; 4]; self.n_views];
        let mut gq_edge = vec![[0.0; 4]; self.n_edges];
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        if let Some(d) = diag.as_deref_mut() {
            d.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut hq_view = vec![[0.0; 4]; self.n_views];
        let mut hq_edge = vec![[0.0; 4]; self.n_edges];
        const AXES: [Vector3<f64>; 3] = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 0.0, 1.0)];

        let mut per_edge = vec![0.0; self.n_edges];
        for (e, range) in self.edge_ranges.iter().enumerate() {
            let (pe, sigma) = &edges[e];
            for term in &self.terms[range.clone()] {
                let pv = &views[term.view];
                let r = &self.rays[term.view][term.slot];
                let di = self.depth_offset[term.view] + term.slot;
                let d = x[di];
                let cam = r * d - pv.t;
                let u = quat::rotate(&quat::conj(&pv.q), &cam);
                let y = self.target(term, &edges);
                let res = u - y;
                let n = if eps > 0.0 { (res.norm_squared() + eps * eps).sqrt() } else { res.norm() };
                per_edge[e] += term.o * (n - eps);
                if let Some(h) = diag.as_deref_mut() {
                    let wt = w.pair * term.o / n.max(1e-12);
                    h[di] += wt * r.norm_squared();
                    let vo = 7 * term.view;
                    let eo = self.edge_offset(e);
                    for a in 0..3 {
                        h[vo + 4 + a] += wt;
                        h[eo + 4 + a] += wt * sigma * sigma;
                    }
                    h[eo + 7] += wt * y.norm_squared();
                    for ax in &AXES {
                        let jv = quat::rotate_t_grad(&pv.q, &cam, ax);
                        let je = quat::rotate_grad(&pe.q, &term.s, ax);
                        for c in 0..4 {
                            hq_view[term.view][c] += wt * jv[c] * jv[c];
                            hq_edge[e][c] += wt * sigma * sigma * je[c] * je[c];
                        }
                    }
                }
                let Some(g) = grad.as_deref_mut() else {
                    continue;
                };
                if n == 0.0 || term.o == 0.0 {
                    continue;
                }
                let gu = res * (w.pair * term.o / n);
                let rg = quat::rotate(&pv.q, &gu);
                g[di] += rg.dot(r);
                let vo = 7 * term.view;
                for a in 0..3 {
                    g[vo + 4 + a] -= rg[a];
                }
                let dq = quat::rotate_t_grad(&pv.q, &cam, &gu);
                add4(&mut gq_view[term.view], &dq);
                let gy = -gu;
                let eo = self.edge_offset(e);
                for a in 0..3 {
                    g[eo + 4 + a] += sigma * gy[a];
                }
                let dq = quat::rotate_grad(&pe.q, &term.s, &(gy * *sigma));
                add4(&mut gq_edge[e], &dq);
                g[eo + 7] += y.dot(&gy);
            }
        }
        let pairwise: f64 = per_edge.iter().sum();

        let mut rot = 0.0;
        let mut trans = 0.0;
        let sym_needed = w.rot > 0.0 || w.trans > 0.0;
        for &(r, j, vid) in &self.pairs {
            let Some(plane) = planes.get(&vid) else {
                if sym_needed {
                    let index = match vid.kind {
                        ViewKind::Virtual(i) => i as usize,
                        ViewKind::Real => 0,
                    };
                    return Err(Error::PlaneUnavailable(index));
                }
                continue;
            };
            let (pr, pj) = (&views[r], &views[j]);
            let n = plane.normal;
            let qn: Q = [0.0, n.x, n.y, n.z];
            let h = n * (2.0 * n.dot(&plane.point));
            let qp = quat::mul(&quat::mul(&X_FLIP, &pr.q), &qn);
            let rh = quat::rotate(&pr.q, &h);
            let tp = flip3(&(rh + pr.t));
            let s = quat::dot(&qp, &pj.q);
            rot += 1.0 - s.abs();
            let dt = tp - pj.t;
            trans += dt.norm_squared();
            if let Some(hd) = diag.as_deref_mut() {
                for c in 0..4 {
                    hq_view[j][c] += w.rot;
                    hq_view[r][c] += w.rot;
                }
                for ax in &AXES {
                    let jr = quat::rotate_grad(&pr.q, &h, ax);
                    for c in 0..4 {
                        hq_view[r][c] += 2.0 * w.trans * jr[c] * jr[c];
                    }
                }
                for a in 0..3 {
                    hd[7 * j + 4 + a] += 2.0 * w.trans;
                    hd[7 * r + 4 + a] += 2.0 * w.trans;
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                let sg = if s >= 0.0 { 1.0 } else { -1.0 };
                let back = quat::mul(&quat::mul(&quat::conj(&X_FLIP), &pj.q), &quat::conj(&qn));
                add4(&mut gq_view[j], &scale4(&qp, -w.rot * sg));
                add4(&mut gq_view[r], &scale4(&back, -w.rot * sg));
                let gtp = flip3(&(dt * (2.0 * w.trans)));
                for a in 0..3 {
                    g[7 * j + 4 + a] -= 2.0 * w.trans * dt[a];
                    g[7 * r + 4 + a] += gtp[a];
                }
                add4(&mut gq_view[r], &quat::rotate_grad(&pr.q, &h, &gtp));
            }
        }

        if let Some(hd) = diag {
            for v in 0..self.n_views {
                hd[7 * v..7 * v + 4].copy_from_slice(&hq_view[v]);
            }
            for e in 0..self.n_edges {
                let o = self.edge_offset(e);
                hd[o..o + 4].copy_from_slice(&hq_edge[e]);
            }
        }
        if want {
            let g = grad.expect("gradient buffer");
            for (v, p) in views.iter().enumerate() {
                let d = quat::through_normalization(&p.raw, &gq_view[v]);
                g[7 * v..7 * v + 4].copy_from_slice(&d);
            }
            for (e, (p, _)) in edges.iter().enumerate() {
                let o = self.edge_offset(e);
                let d = quat::through_normalization(&p.raw, &gq_edge[e]);
                g[o..o + 4].copy_from_slice(&d);
            }
        }

        Ok(LossBreakdown {
            pairwise,
            rot,
            trans,
            total: w.pair * pairwise + w.rot * rot + w.trans * trans,
            per_edge,
        })
    }

    /// Sets every depth to the confidence-weighted least-squares position of
    /// its targets along the pixel ray. Slots without targets keep their
    /// depth.
    pub(crate) fn refit_depths(&self, x: &mut [f64]) {
        let (views, edges) = self.decode(x);
        let mut num: Vec<f64> = vec![0.0; self.n_params];
        let mut den: Vec<f64> = vec![0.0; self.n_params];
        for term in &self.terms {
            let pv = &views[term.view];
            let a = quat::rotate(&quat::conj(&pv.q), &self.rays[term.view][term.slot]);
            let c = -quat::rotate(&quat::conj(&pv.q), &pv.t);
            let y = self.target(term, &edges);
            let di = self.depth_offset[term.view] + term.slot;
            // zero-confidence targets still anchor otherwise empty slots
            let o = term.o.max(1e-12);
            num[di] += o * a.dot(&(y - c));
            den[di] += o * a.norm_squared();
        }
        for v in 0..self.n_views {
            let start = self.depth_offset[v];
            let end = self.depth_offset.get(v + 1).copied().unwrap_or(self.n_params);
            for i in start..end {
                if den[i] > 0.0 {
                    x[i] = num[i] / den[i];
                }
            }
        }
    }
}

fn add4(a: &mut Q, b: &Q) {
    for i in 0..4 {
        a[i] += b[i];
    }
}

fn scale4(a: &Q, s: f64) -> Q {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// Confidence-weighted pointmap alignment term.
pub fn pairwise_loss(state: &GlobalState, preds: &[PairPrediction]) -> Result<f64> {
    let w = LossWeights {
        pair: 1.0,
        rot: 0.0,
        trans: 0.0,
    };
    Ok(Problem::new(state, preds)?.eval(&state.params(), &state.planes, &w, None)?.pairwise)
}

fn sym_terms(state: &GlobalState) -> Result<LossBreakdown> {
    let w = LossWeights {
        pair: 0.0,
        rot: 1.0,
        trans: 1.0,
    };
    Problem::new(state, &[])?.eval(&state.params(), &state.planes, &w, None)
}

/// Σ (1 − |q'_real · q_vir|) over real/virtual pairs.
pub fn rot_loss(state: &GlobalState) -> Result<f64> {
    Ok(sym_terms(state)?.rot)
}

/// Σ ‖t'_real − t_vir‖² over real/virtual pairs.
pub fn trans_loss(state: &GlobalState) -> Result<f64> {
    Ok(sym_terms(state)?.trans)
}

pub fn total_loss(state: &GlobalState, preds: &[PairPrediction], weights: &LossWeights) -> Result<LossBreakdown> {
    weights.validate()?;
    Problem::new(state, preds)?.eval(&state.params(), &state.planes, weights, None)
}

/// Loss and its gradient with respect to [`GlobalState::params`]. Planes are
/// held fixed.
pub fn total_loss_with_gradient(
    state: &GlobalState,
    preds: &[PairPrediction],
    weights: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    weights.validate()?;
    let problem = Problem::new(state, preds)?;
    let mut g = vec![0.0; problem.n_params];
    let b = problem.eval(&state.params(), &state.planes, weights, Some(&mut g))?;
    Ok((b, g))
}

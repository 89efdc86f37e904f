//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Every stochastic check runs on a fixed seed declared next to it.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use cgwish_core::datasets::{
    seven_vertex_graph, sim50_graph, sim50_sigma, yeast_covariance, yeast_graph, YEAST_GENES, YEAST_N,
};
use cgwish_core::gibbs::run_chain_observed;
use cgwish_core::homogeneous::HyperMarkovCheck;
use cgwish_core::linalg::{
    dlinv_dl, relative_frobenius, spd_log_det, submatrix, trace_hessian_entry, tri_inverse,
    tri_inverse_pathsum,
};
use cgwish_core::random::{
    random_decomposable_graph, random_homogeneous_graph, random_spd, random_unit_lower,
};
use cgwish_core::sampling::{invgamma_log_pdf, standard_normal_vector};
use cgwish_core::wishart::log_unnorm_density_theta;
use cgwish_core::{
    clique_decomposition, expected_sigma, hasse_order, is_homogeneous, log_normalizing_constant,
    modified_cholesky, neighbor_index, HomogeneousModel, perfect_vertex_order, posterior_update, reconstruct,
    rng_stream, run_chain, sample_covariance, CholFactor, DataSummary, ExactSampler, GammaCoords,
    GibbsConfig, Graph, IncompleteMatrix, PriorSpec,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn preceding_counts(g: &Graph) -> Vec<usize> {
    neighbor_index(g).preceding_counts()
}

fn to_hasse(g: &Graph) -> Graph {
    g.relabel(&hasse_order(g).expect("homogeneous"))
}

/// Free entries `(i, j)`, `i <= j`, allowed by the graph.
fn free_entries(g: &Graph) -> Vec<(usize, usize)> {
    let m = g.num_vertices();
    (0..m)
        .flat_map(|j| (0..=j).map(move |i| (i, j)))
        .filter(|&(i, j)| g.allows(i, j))
        .collect()
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
fn binomial_upper_tail(n: usize, p: f64, k: usize) -> f64 {
    let mut log_pmf = n as f64 * (1.0 - p).ln();
    let mut below = 0.0;
    for i in 0..k {
        below += log_pmf.exp();
        log_pmf += ((n - i) as f64 / (i + 1) as f64).ln() + (p / (1.0 - p)).ln();
    }
    (1.0 - below).max(0.0)
}

/// Exceedance count against what a correct sampler would produce by chance.
fn multiplicity_note(fails: usize, tests: usize) -> String {
    format!(
        "{fails} of {tests} comparisons beyond 3 SE; a correct implementation averages {:.1}, P(all within) = {:.3}, P(>= {fails} beyond) = {:.3}",
        tests as f64 * 0.0027,
        0.9973f64.powi(tests as i32),
        binomial_upper_tail(tests, 0.0027, fails)
    )
}

// ---------------------------------------------------------------- criterion 1

const BY1: [[f64; 8]; 8] = table([
    &[0.164, 0.030, 0.0, -0.050, 0.0, 0.0, 0.0, -0.068],
    &[0.142, 0.040, 0.041, 0.0, 0.0, 0.0, 0.027],
    &[0.237, 0.072, 0.193, 0.194, 0.235, 0.216],
    &[0.626, 0.713, 0.544, 0.509, 0.575],
    &[3.462, 2.584, 2.756, 2.533],
    &[2.373, 2.400, 2.266],
    &[2.961, 2.501],
    &[3.003],
]);

const BY2: [[f64; 8]; 8] = table([
    &[0.156, 0.030, 0.0, -0.052, 0.0, 0.0, 0.0, -0.068],
    &[0.133, 0.041, 0.042, 0.0, 0.0, 0.0, 0.028],
    &[0.232, 0.076, 0.199, 0.2, 0.243, 0.223],
    &[0.643, 0.747, 0.568, 0.532, 0.599],
    &[3.588, 2.682, 2.866, 2.636],
    &[2.453, 2.497, 2.358],
    &[3.086, 2.604],
    &[3.153],
]);

/// Symmetric table from upper-triangular rows.
const fn table(rows: [&[f64]; 8]) -> [[f64; 8]; 8] {
    let mut t = [[0.0; 8]; 8];
    let mut i = 0;
    while i < 8 {
        let mut k = 0;
        while k < rows[i].len() {
            t[i][i + k] = rows[i][k];
            t[i + k][i] = rows[i][k];
            k += 1;
        }
        i += 1;
    }
    t
}

fn criterion_1() -> Verdict {
    let g = yeast_graph();
    let s = yeast_covariance();
    let data = DataSummary::new(YEAST_N, s.clone(), true).unwrap();
    let k = preceding_counts(&g);
    let by1 = PriorSpec::new(
        DMatrix::identity(8, 8) * (s.trace() / 8.0),
        DVector::from_iterator(8, k.iter().map(|&c| 5.0 + c as f64)),
    )
    .unwrap();
    let by2 = PriorSpec::new(DMatrix::zeros(8, 8), DVector::from_element(8, 2.0)).unwrap();
    let cfg = GibbsConfig {
        burn_in: 1000,
        iterations: 5000,
        seed: 1,
        ..GibbsConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, prior, reference) in [("BY1", by1, BY1), ("BY2", by2, BY2)] {
        let post = posterior_update(&prior, &data).unwrap();
        let est = run_chain(&cfg, &post, &g).unwrap().mean;
        let mut worst = (0.0, 0, 0);
        let mut outside = Vec::new();
        for i in 0..8 {
            for j in i..8 {
                let d = (est[(i, j)] - reference[i][j]).abs();
                if d > worst.0 {
                    worst = (d, i, j);
                }
                if d > 0.06 {
                    outside.push(format!(
                        "{}/{} {:.3} vs {:.3}",
                        YEAST_GENES[i], YEAST_GENES[j], est[(i, j)], reference[i][j]
                    ));
                }
            }
        }
        pass &= outside.is_empty();
        parts.push(format!(
            "{name}: max |diff| {:.3} at {}/{}{}",
            worst.0,
            YEAST_GENES[worst.1],
            YEAST_GENES[worst.2],
            if outside.is_empty() {
                String::new()
            } else {
                format!(" (outside 0.06: {})", outside.join(", "))
            }
        ));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Verdict {
    let g = sim50_graph();
    let m = g.num_vertices();
    let sigma = sim50_sigma(&g);
    let chol = sigma.clone().cholesky().unwrap().l();
    let mut rng = rng_stream(2024, 0);
    let n = 100;
    let y = DMatrix::from_fn(n, m, |_, _| 0.0);
    let mut y = y;
    for r in 0..n {
        let x = &chol * standard_normal_vector(m, &mut rng);
        y.row_mut(r).copy_from(&x.transpose());
    }
    let data = sample_covariance(&y, true).unwrap();
    let k = preceding_counts(&g);
    let prior = PriorSpec::new(
        DMatrix::zeros(m, m),
        DVector::from_iterator(m, k.iter().map(|&c| 2.0 * c as f64 + 5.0)),
    )
    .unwrap();
    let post = posterior_update(&prior, &data).unwrap();
    let truth = expected_sigma(&post, &g).unwrap();

    let checkpoints = [1000usize, 2000, 5000];
    let seeds = [1u64, 2, 3, 4, 5];
    let mut errs = vec![vec![0.0; checkpoints.len()]; seeds.len()];
    let mut slowest = 0.0f64;
    for (si, &seed) in seeds.iter().enumerate() {
        let cfg = GibbsConfig {
            burn_in: 4000,
            iterations: 5000,
            seed,
            ..GibbsConfig::default()
        };
        let mut sum = DMatrix::zeros(m, m);
        let mut kept = 0usize;
        let mut row = vec![0.0; checkpoints.len()];
        let t0 = Instant::now();
        let res = run_chain_observed(&cfg, &post, &g, &mut |_, f| {
            sum += reconstruct(f);
            kept += 1;
            if let Some(c) = checkpoints.iter().position(|&c| c == kept) {
                row[c] = relative_frobenius(&(&sum / kept as f64), &truth);
            }
        })
        .unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        assert!((relative_frobenius(&res.mean, &truth) - row[2]).abs() < 1e-12);
        errs[si] = row;
    }
    let avg: Vec<f64> = (0..checkpoints.len())
        .map(|c| errs.iter().map(|r| r[c]).sum::<f64>() / seeds.len() as f64)
        .collect();
    let final_max = errs.iter().map(|r| r[2]).fold(0.0, f64::max);
    let monotone = avg.windows(2).all(|w| w[1] <= w[0]);
    let pass = final_max < 0.02 && monotone && slowest < 120.0;
    Verdict {
        pass,
        detail: format!(
            "rel. Frobenius at B=4000,I=5000 max over seeds {:.4} (< 0.02); mean over 5 seeds at I=1000/2000/5000: {:.4}/{:.4}/{:.4}; slowest run {:.1} s",
            final_max, avg[0], avg[1], avg[2], slowest
        ),
    }
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3() -> Verdict {
    let mut rng = rng_stream(303, 0);
    let n_exact = 100_000;
    let mut tests = 0usize;
    let mut fails: Vec<String> = Vec::new();
    let mut max_z = 0.0f64;
    for case in 0..20 {
        let m = rng.random_range(2..=10);
        let g = random_homogeneous_graph(m, &mut rng);
        // the shape vector is tied to the order the oracle works in
        let order = HomogeneousModel::new(&g).unwrap().order().clone();
        let gw = g.relabel(&order);
        let k = preceding_counts(&gw);
        let alpha_w = DVector::from_iterator(
            m,
            k.iter().map(|&c| c as f64 + 10.0 + rng.random_range(0.0..4.0)),
        );
        let u = random_spd(m, &mut rng);
        let prior = PriorSpec::new(u, order.unpermute_vector(&alpha_w)).unwrap();
        let closed = expected_sigma(&prior, &g).unwrap();

        let sampler = ExactSampler::new(&prior, &g).unwrap();
        let mut s1 = DMatrix::zeros(m, m);
        let mut s2 = DMatrix::zeros(m, m);
        for _ in 0..n_exact {
            let x = sampler.sample(&mut rng).unwrap();
            s2 += x.component_mul(&x);
            s1 += x;
        }
        let nf = n_exact as f64;
        let mc = &s1 / nf;
        let se_exact = (&s2 / nf - mc.component_mul(&mc)).map(|v| (v.max(0.0) / (nf - 1.0)).sqrt());

        let cfg = GibbsConfig {
            burn_in: 1000,
            iterations: 50_000,
            seed: 3000 + case,
            ..GibbsConfig::default()
        };
        let pw = prior.permuted(&order);
        let res = run_chain(&cfg, &pw, &gw).unwrap();
        let gibbs = order.unpermute_matrix(&res.mean);
        let se_gibbs = order.unpermute_matrix(&res.std_error);

        for (i, j) in free_entries(&g) {
            let checks = [
                ("exact-vs-closed", mc[(i, j)] - closed[(i, j)], se_exact[(i, j)]),
                ("gibbs-vs-closed", gibbs[(i, j)] - closed[(i, j)], se_gibbs[(i, j)]),
                (
                    "gibbs-vs-exact",
                    gibbs[(i, j)] - mc[(i, j)],
                    se_gibbs[(i, j)].hypot(se_exact[(i, j)]),
                ),
            ];
            for (what, diff, se) in checks {
                tests += 1;
                let z = diff.abs() / se;
                max_z = max_z.max(z);
                if !(z <= 3.0) {
                    fails.push(format!("graph {} m={m} ({},{}) {what} z={z:.2}", case + 1, i + 1, j + 1));
                }
            }
        }
    }
    Verdict {
        pass: fails.is_empty(),
        detail: format!(
            "{}; max z {max_z:.2}{}",
            multiplicity_note(fails.len(), tests),
            if fails.is_empty() {
                String::new()
            } else {
                format!("; {}", fails.join("; "))
            }
        ),
    }
}

// ---------------------------------------------------------------- criterion 4

/// One representative of every homogeneous graph on `m` vertices up to isomorphism.
fn homogeneous_graphs(m: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let perms = permutations(m);
    let mut seen: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let g = Graph::from_edges(m, &edges).unwrap();
        if !is_homogeneous(&g) {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                let mut e: Vec<(usize, usize)> = edges
                    .iter()
                    .map(|&(a, b)| (p[a].min(p[b]), p[a].max(p[b])))
                    .collect();
                e.sort_unstable();
                e
            })
            .min()
            .unwrap();
        if !seen.contains(&canon) {
            seen.push(canon);
            out.push(g);
        }
    }
    out
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// Log density of the exact-sampler law at `gamma`, computed directly from `U` and `α`.
fn log_proposal(gamma: &GammaCoords, g: &Graph, u: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..g.num_vertices() {
        let pre: Vec<usize> = g.neighbors(i).iter().copied().filter(|&j| j < i).collect();
        let k = pre.len();
        let ukk = submatrix(u, &pre);
        let uki = DVector::from_iterator(k, pre.iter().map(|&j| u[(j, i)]));
        let (mu, schur, logdet) = if k == 0 {
            (DVector::zeros(0), u[(i, i)], 0.0)
        } else {
            let ch = ukk.clone().cholesky().unwrap();
            let mu = ch.solve(&uki);
            (mu.clone(), u[(i, i)] - uki.dot(&mu), spd_log_det(&ukk).unwrap())
        };
        let a = alpha[i] / 2.0 - k as f64 / 2.0 - 1.0;
        let d = gamma.d[i];
        total += invgamma_log_pdf(d, a, schur / 2.0);
        if k > 0 {
            let r = &gamma.beta[i] - mu;
            let quad = r.dot(&(&ukk * &r));
            total += -0.5 * k as f64 * (2.0 * std::f64::consts::PI * d).ln() + 0.5 * logdet
                - quad / (2.0 * d);
        }
    }
    total
}

fn criterion_4() -> Verdict {
    let mut rng = rng_stream(404, 0);
    let graphs: Vec<Graph> = (1..=4).flat_map(homogeneous_graphs).map(|g| to_hasse(&g)).collect();
    let n = 20_000;
    let mut tests = 0;
    let mut fails = Vec::new();
    let mut max_z = 0.0f64;
    for (gi, g) in graphs.iter().enumerate() {
        let m = g.num_vertices();
        let k = preceding_counts(g);
        for rep in 0..10 {
            let u = random_spd(m, &mut rng);
            let alpha = DVector::from_iterator(
                m,
                k.iter().map(|&c| c as f64 + 4.0 + rng.random_range(0.0..3.0)),
            );
            let prior = PriorSpec::new(u.clone(), alpha.clone()).unwrap();
            let closed = log_normalizing_constant(&prior, g).unwrap();
            let alpha_q = alpha.add_scalar(0.5);
            let proposal = ExactSampler::new(&PriorSpec::new(u.clone(), alpha_q.clone()).unwrap(), g).unwrap();
            let logw: Vec<f64> = (0..n)
                .map(|_| {
                    let gamma = proposal.sample_gamma(&mut rng).unwrap();
                    let f = modified_cholesky(&proposal.sigma_from_gamma(&gamma)).unwrap();
                    log_unnorm_density_theta(&f, &prior).unwrap() - log_proposal(&gamma, g, &u, &alpha_q)
                })
                .collect();
            let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logw.iter().map(|l| (l - shift).exp()).collect();
            let mean = w.iter().sum::<f64>() / n as f64;
            let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let estimate = mean.ln() + shift;
            let se = var.sqrt() / (mean * (n as f64).sqrt());
            let z = (estimate - closed).abs() / se;
            tests += 1;
            max_z = max_z.max(z);
            if !(z <= 3.0) {
                fails.push(format!(
                    "graph {} (m={m}, {} edges) prior {}: closed {closed:.4} vs IS {estimate:.4} ± {se:.4}",
                    gi + 1,
                    g.num_edges(),
                    rep + 1
                ));
            }
        }
    }
    Verdict {
        pass: fails.is_empty() && graphs.len() == 16,
        detail: format!(
            "{} homogeneous graphs x 10 priors; {}; max z {max_z:.2}{}",
            graphs.len(),
            multiplicity_note(fails.len(), tests),
            if fails.is_empty() {
                String::new()
            } else {
                format!("; {}", fails.join("; "))
            }
        ),
    }
}

// ---------------------------------------------------------------- criterion 5

fn random_perfect_instance<R: Rng>(rng: &mut R) -> (Graph, CholFactor, DMatrix<f64>) {
    loop {
        let m = rng.random_range(2..=8);
        let g = random_decomposable_graph(m, rng);
        let g = g.relabel(&perfect_vertex_order(&g).unwrap());
        if g.num_edges() == 0 {
            continue;
        }
        let l = random_unit_lower(&g, rng);
        let d = DVector::from_iterator(m, (0..m).map(|_| rng.random_range(0.5..2.0)));
        let u = random_spd(m, rng);
        return (g, CholFactor::new(l, d).unwrap(), u);
    }
}

fn trace_objective(f: &CholFactor, u: &DMatrix<f64>) -> f64 {
    let b = tri_inverse(&f.l);
    let q = &b * u * b.transpose();
    (0..f.dim()).map(|i| q[(i, i)] / f.d[i]).sum()
}

fn criterion_5() -> Verdict {
    let mut rng = rng_stream(505, 0);
    let h = 1e-6;
    let mut worst3 = 0.0f64;
    for _ in 0..100 {
        let (g, f, _) = random_perfect_instance(&mut rng);
        let edges: Vec<(usize, usize)> = g.edges().map(|(j, i)| (i, j)).collect();
        let (u, v) = edges[rng.random_range(0..edges.len())];
        let exact = dlinv_dl(&f.l, &g, u, v).unwrap();
        let mut lp = f.l.clone();
        let mut lm = f.l.clone();
        lp[(u, v)] += h;
        lm[(u, v)] -= h;
        let fd = (tri_inverse(&lp) - tri_inverse(&lm)) / (2.0 * h);
        worst3 = worst3.max((exact - fd).abs().max());
    }
    // tr(Σ^{-1}Ũ) is exactly quadratic in one column block, so a wider step
    // costs no truncation error and keeps cancellation small.
    let h2 = 1e-3;
    let mut worst4 = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let (g, f, ut) = random_perfect_instance(&mut rng);
        let cols: Vec<(usize, Vec<usize>)> = (0..g.num_vertices())
            .map(|v| (v, g.neighbors(v).iter().copied().filter(|&w| w > v).collect::<Vec<_>>()))
            .filter(|(_, r)| !r.is_empty())
            .collect();
        let (v, rows) = &cols[rng.random_range(0..cols.len())];
        let a = rows[rng.random_range(0..rows.len())];
        let b = rows[rng.random_range(0..rows.len())];
        let exact = trace_hessian_entry(&f, &ut, &g, *v, a, b).unwrap();
        let eval = |da: f64, db: f64| {
            let mut x = f.clone();
            x.l[(a, *v)] += da;
            x.l[(b, *v)] += db;
            trace_objective(&x, &ut)
        };
        let fd = if a == b {
            (eval(h2, 0.0) - 2.0 * eval(0.0, 0.0) + eval(-h2, 0.0)) / (h2 * h2)
        } else {
            (eval(h2, h2) - eval(h2, -h2) - eval(-h2, h2) + eval(-h2, -h2)) / (4.0 * h2 * h2)
        };
        worst4 = worst4.max((exact - fd).abs() / exact.abs().max(1.0));
        done += 1;
    }
    Verdict {
        pass: worst3 < 1e-5 && worst4 < 1e-4,
        detail: format!(
            "dL^-1/dL max abs error {worst3:.2e} (< 1e-5); Hessian max rel error {worst4:.2e} (< 1e-4); 100 instances each"
        ),
    }
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Verdict {
    let mut rng = rng_stream(606, 0);
    let mut worst_path = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=10);
        let mut l = DMatrix::identity(m, m);
        let density = rng.random_range(0.2..1.0);
        for i in 0..m {
            for j in 0..i {
                if rng.random_bool(density) {
                    l[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
        }
        let d = (tri_inverse_pathsum(&l).unwrap() - tri_inverse(&l)).abs().max();
        worst_path = worst_path.max(d);
    }

    let mut graphs: Vec<Graph> = vec![yeast_graph(), seven_vertex_graph()];
    for _ in 0..10 {
        let m = rng.random_range(3..=10);
        graphs.push(random_decomposable_graph(m, &mut rng));
        graphs.push(random_homogeneous_graph(m, &mut rng));
    }
    let mut worst_l = 0.0f64;
    let mut worst_linv = 0.0f64;
    let mut checked = 0;
    for g in &graphs {
        let m = g.num_vertices();
        let dec = clique_decomposition(g).unwrap();
        let mut orders = vec![perfect_vertex_order(g).unwrap()];
        let homogeneous = is_homogeneous(g);
        if homogeneous {
            orders.push(hasse_order(g).unwrap());
        }
        for _ in 0..200 {
            // Σ ∈ P_G built without reference to any ordering
            let w = random_spd(m, &mut rng);
            let sigma = IncompleteMatrix::project(&w, g).completion_inverse(&dec).unwrap();
            for (oi, order) in orders.iter().enumerate() {
                let h = g.relabel(order);
                let f = modified_cholesky(&order.permute_matrix(&sigma)).unwrap();
                let linv = tri_inverse(&f.l);
                for i in 0..m {
                    for j in 0..i {
                        if !h.has_edge(i, j) {
                            worst_l = worst_l.max(f.l[(i, j)].abs());
                            if oi == 1 {
                                worst_linv = worst_linv.max(linv[(i, j)].abs());
                            }
                        }
                    }
                }
            }
            checked += 1;
        }
    }
    Verdict {
        pass: worst_path < 1e-10 && worst_l < 1e-12 && worst_linv < 1e-12,
        detail: format!(
            "path-sum vs substitution max {worst_path:.1e} over 200 matrices; fill-in max |L| {worst_l:.1e}, max |L^-1| under Hasse order {worst_linv:.1e} over {} graphs x 200 draws",
            checked / 200
        ),
    }
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Verdict {
    let mut rng = rng_stream(707, 0);
    let mut worst_pool = 0.0f64;
    let mut worst_commute = 0.0f64;
    let close = |a: &PriorSpec, b: &PriorSpec| {
        let scale = a.u.abs().max().max(1.0);
        ((&a.u - &b.u).abs().max() / scale).max((&a.alpha - &b.alpha).abs().max() / a.alpha.abs().max())
    };
    for t in 0..100 {
        let m = rng.random_range(1..=8);
        let u = if t % 4 == 0 {
            DMatrix::zeros(m, m)
        } else {
            random_spd(m, &mut rng)
        };
        let alpha = DVector::from_iterator(m, (0..m).map(|_| rng.random_range(1.0..20.0)));
        let prior = PriorSpec::new(u, alpha).unwrap();
        let draw = |rng: &mut cgwish_core::ChainRng, n: usize| {
            DMatrix::from_fn(n, m, |_, _| rng.random_range(-2.0..2.0))
        };
        let (n1, n2) = (rng.random_range(2..30), rng.random_range(2..30));
        let y1 = draw(&mut rng, n1);
        let y2 = draw(&mut rng, n2);
        let d1 = sample_covariance(&y1, false).unwrap();
        let d2 = sample_covariance(&y2, false).unwrap();
        let seq = posterior_update(&posterior_update(&prior, &d1).unwrap(), &d2).unwrap();
        let pooled = posterior_update(&prior, &d1.pool(&d2).unwrap()).unwrap();
        let rev = posterior_update(&posterior_update(&prior, &d2).unwrap(), &d1).unwrap();
        worst_pool = worst_pool.max(close(&seq, &pooled));
        worst_commute = worst_commute.max(close(&seq, &rev));
        let c1 = sample_covariance(&y1, true).unwrap();
        let c2 = sample_covariance(&y2, true).unwrap();
        let a = posterior_update(&posterior_update(&prior, &c1).unwrap(), &c2).unwrap();
        let b = posterior_update(&posterior_update(&prior, &c2).unwrap(), &c1).unwrap();
        worst_commute = worst_commute.max(close(&a, &b));
    }
    Verdict {
        pass: worst_pool < 1e-12 && worst_commute < 1e-12,
        detail: format!(
            "posterior-of-posterior vs pooled max rel diff {worst_pool:.1e}; order of updates max rel diff {worst_commute:.1e}; 100 instances"
        ),
    }
}

// ---------------------------------------------------------------- criterion 8

/// `∫ π̃ dD` in closed form, up to a constant: `Π_i (q_i/2)^{1 - α_i/2}`, `q = diag(L^{-1} U L^{-T})`.
fn log_d_integrated(l: &DMatrix<f64>, u: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    let b = tri_inverse(l);
    let q = &b * u * b.transpose();
    (0..l.nrows())
        .map(|i| (1.0 - alpha[i] / 2.0) * (q[(i, i)] / 2.0).ln())
        .sum()
}

/// Importance-sampling estimate of `∫_{[-R,R]^p} f(L) dL` over the free entries
/// of `L`, with proposal density `1 / (2 (1+|x|) ln(1+R))` per coordinate.
fn box_integral(g: &Graph, u: &DMatrix<f64>, alpha: &DVector<f64>, r: f64, n: usize, seed: u64) -> f64 {
    let mut rng = rng_stream(seed, 0);
    let edges: Vec<(usize, usize)> = g.edges().map(|(j, i)| (i, j)).collect();
    let m = g.num_vertices();
    let norm = (1.0 + r).ln();
    let mut sum = 0.0;
    for _ in 0..n {
        let mut l = DMatrix::identity(m, m);
        let mut log_q = 0.0;
        for &(i, j) in &edges {
            let mag = (rng.random::<f64>() * norm).exp() - 1.0;
            let x = if rng.random_bool(0.5) { mag } else { -mag };
            l[(i, j)] = x;
            log_q -= (2.0 * (1.0 + mag) * norm).ln();
        }
        sum += (log_d_integrated(&l, u, alpha) - log_q).exp();
    }
    sum / n as f64
}

fn criterion_8() -> Verdict {
    let graphs = [
        ("K2", Graph::complete(2)),
        ("path-3", Graph::path(3)),
        ("star centre last", Graph::star(3, 2)),
        ("K3", Graph::complete(3)),
    ];
    let boxes = [10.0, 100.0, 1e3, 1e4];
    let n = 200_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for (gi, (name, g)) in graphs.iter().enumerate() {
        let m = g.num_vertices();
        let k = preceding_counts(g);
        let u = random_spd(m, &mut rng_stream(808, gi as u64));
        let good = DVector::from_iterator(m, k.iter().map(|&c| c as f64 + 3.0));
        let mut bad = good.clone();
        bad[m - 1] = k[m - 1] as f64 + 1.5;
        let est = |alpha: &DVector<f64>| -> Vec<f64> {
            boxes
                .iter()
                .enumerate()
                .map(|(bi, &r)| box_integral(g, &u, alpha, r, n, 8000 + 10 * gi as u64 + bi as u64))
                .collect()
        };
        let e_good = est(&good);
        let e_bad = est(&bad);
        let bounded = e_good[3] / e_good[1] < 1.2;
        let diverges = e_bad.windows(2).all(|w| w[1] > w[0]) && e_bad[3] / e_bad[1] > 5.0;
        pass &= bounded && diverges;
        parts.push(format!(
            "{name}: ratio R=1e4/R=100 {:.3} inside, {:.2} below boundary{}",
            e_good[3] / e_good[1],
            e_bad[3] / e_bad[1],
            if bounded && diverges { "" } else { " [wrong]" }
        ));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Verdict {
    let g = to_hasse(&seven_vertex_graph());
    let m = g.num_vertices();
    let mut rng = rng_stream(909, 0);
    let k = preceding_counts(&g);
    let prior = PriorSpec::new(
        random_spd(m, &mut rng),
        DVector::from_iterator(m, k.iter().map(|&c| c as f64 + 14.0)),
    )
    .unwrap();
    let sampler = ExactSampler::new(&prior, &g).unwrap();
    assert!(sampler.model().order().is_identity());
    let mut check = HyperMarkovCheck::new(&g).unwrap();
    let n = 100_000;
    for _ in 0..n {
        check.push_working(&sampler.sample_working(&mut rng).unwrap()).unwrap();
    }
    let rep = check.report();
    Verdict {
        pass: rep.flagged.is_empty() && rep.samples == n,
        detail: format!(
            "max |corr| {:.5} vs threshold {:.5} over {} vertices with a leading block",
            rep.max_abs_correlation(),
            rep.threshold,
            rep.per_vertex.len()
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("yeast posterior means vs reference table", criterion_1),
        ("50-vertex simulation vs closed-form mean", criterion_2),
        ("exact sampler, Gibbs and closed-form mean agree", criterion_3),
        ("normalizing constant vs importance sampling", criterion_4),
        ("derivative identities vs finite differences", criterion_5),
        ("path-sum inverse and zero fill-in", criterion_6),
        ("conjugate updating", criterion_7),
        ("integrability boundary", criterion_8),
        ("hyper-Markov independence", criterion_9),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let t0 = Instant::now();
        let v = run();
        println!(
            "{} criterion {}: {name} ({:.1} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            t0.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use nalgebra::DMatrix;

use cgwish_core::datasets::{sim50_graph, sim50_sigma};
use cgwish_core::gibbs::run_chain_observed;
use cgwish_core::io::{
    format_csv, format_graph, format_vector, parse_csv, read_config, read_graph,
    read_symmetric_matrix, read_text, write_text,
};
use cgwish_core::linalg::{check_in_pg, relative_frobenius};
use cgwish_core::report::Report;
use cgwish_core::sampling::standard_normal_vector;
use cgwish_core::{
    clique_decomposition, expected_sigma, hasse_diagram, is_decomposable, is_homogeneous,
    layer_sets, log_normalizing_constant, posterior_update, rng_stream, run_chain,
    sample_covariance, verify_order_in_sd, verify_order_in_sh, CholFactor, DataSummary, Error,
    Graph, PriorSpec, VertexOrder,
};

use crate::{CheckGraphArgs, FitArgs, OracleArgs, OrderPolicy, Outcome, SimulateArgs};

fn emit(report: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_text(p, report)?,
        None => print!("{report}"),
    }
    Ok(())
}

fn load_graph(path: &Path) -> anyhow::Result<Graph> {
    read_graph(path).with_context(|| format!("reading graph {}", path.display()))
}

fn one_based(vs: &[usize]) -> String {
    vs.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn check_graph(a: &CheckGraphArgs) -> anyhow::Result<Outcome> {
    let g = load_graph(&a.graph)?;
    let m = g.num_vertices();
    let mut r = Report::new("cgwish check-graph");
    r.section("graph")
        .kv("file", a.graph.display())
        .kv("vertices", m)
        .kv("edges", g.num_edges());
    let decomposable = is_decomposable(&g);
    r.kv("decomposable", yes_no(decomposable));
    if !decomposable {
        r.kv("homogeneous", "no");
        let text = r.into_string();
        emit(&text, a.out.as_deref())?;
        return Ok(Outcome {
            report: text,
            code: crate::EXIT_VALIDATION,
        });
    }
    let homogeneous = is_homogeneous(&g);
    r.kv(
        "homogeneous",
        if homogeneous {
            "yes"
        } else {
            "no (contains an induced 4-vertex path)"
        },
    );
    let identity = VertexOrder::identity(m);
    r.kv("given_order_perfect", yes_no(verify_order_in_sd(&g, &identity)));
    if homogeneous {
        r.kv("given_order_hasse", yes_no(verify_order_in_sh(&g, &identity)));
    }

    let dec = clique_decomposition(&g)?;
    r.section("cliques");
    for (k, c) in dec.cliques.iter().enumerate() {
        r.kv(&format!("clique {}", k + 1), one_based(c));
    }
    for (k, s) in dec.separators.iter().enumerate() {
        r.kv(&format!("separator {}", k + 2), one_based(s));
    }
    r.kv("running_intersection", yes_no(dec.has_running_intersection()));

    let policy = if homogeneous {
        OrderPolicy::Hasse
    } else {
        OrderPolicy::Auto
    };
    let order = policy.resolve(&g)?;
    r.section("ordering")
        .kv("policy", policy.name())
        .kv("sequence", one_based(order.sequence()));

    if homogeneous {
        let h = hasse_diagram(&g)?;
        r.section("hasse");
        for (k, c) in h.classes.iter().enumerate() {
            let parent = h.parent[k].map_or("root".to_string(), |p| (p + 1).to_string());
            r.kv(
                &format!("class {}", k + 1),
                format!("{{{}}} parent = {parent}", one_based(c)),
            );
        }
    }
    let text = r.into_string();
    emit(&text, a.out.as_deref())?;
    Ok(Outcome::ok(text))
}

fn vertex_names(a: &FitArgs, header: Option<Vec<String>>, m: usize) -> anyhow::Result<Vec<String>> {
    let names = match (&a.names, header) {
        (Some(s), _) => s.split(',').map(|x| x.trim().to_string()).collect(),
        (None, Some(h)) => h,
        (None, None) => (1..=m).map(|i| format!("v{i}")).collect(),
    };
    if names.len() != m {
        bail!(Error::DimensionMismatch {
            expected: m,
            found: names.len(),
        });
    }
    Ok(names)
}

fn trace_header(g: &Graph) -> String {
    let mut cols = vec!["iteration".to_string()];
    for (j, i) in g.edges() {
        cols.push(format!("L[{},{}]", i + 1, j + 1));
    }
    for i in 0..g.num_vertices() {
        cols.push(format!("D[{}]", i + 1));
    }
    cols.join(",")
}

fn trace_row(g: &Graph, t: u64, f: &CholFactor) -> String {
    let mut cols = vec![t.to_string()];
    for (j, i) in g.edges() {
        cols.push(format!("{:?}", f.l[(i, j)]));
    }
    cols.extend(f.d.iter().map(|x| format!("{x:?}")));
    cols.join(",")
}

pub fn fit(a: &FitArgs) -> anyhow::Result<Outcome> {
    let start = Instant::now();
    let g = load_graph(&a.graph)?;
    let m = g.num_vertices();
    let mut settings =
        read_config(&a.prior).with_context(|| format!("reading prior {}", a.prior.display()))?;
    if a.burnin.is_some() {
        settings.burn_in = a.burnin;
    }
    if a.iters.is_some() {
        settings.iterations = a.iters;
    }
    if a.seed.is_some() {
        settings.seed = a.seed;
    }
    if a.thin.is_some() {
        settings.thin = a.thin;
    }
    if a.chains.is_some() {
        settings.chains = a.chains;
    }
    if a.center {
        settings.center = Some(true);
    }
    if a.no_center {
        settings.center = Some(false);
    }
    let center = settings.center.unwrap_or(true);
    settings.center = Some(center);

    let (data, header, source) = match (&a.data, &a.cov) {
        (Some(p), _) => {
            let (h, y) = parse_csv(&read_text(p)?, a.header)
                .with_context(|| format!("reading data {}", p.display()))?;
            if y.ncols() != m {
                bail!(Error::DimensionMismatch {
                    expected: m,
                    found: y.ncols(),
                });
            }
            (sample_covariance(&y, center)?, h, format!("csv {}", p.display()))
        }
        (None, Some(p)) => {
            let s = read_symmetric_matrix(p)?;
            if s.nrows() != m {
                bail!(Error::DimensionMismatch {
                    expected: m,
                    found: s.nrows(),
                });
            }
            let n = a.n.expect("clap requires --n with --cov");
            (DataSummary::new(n, s, center)?, None, format!("covariance {}", p.display()))
        }
        (None, None) => bail!(Error::InvalidConfig("give --data or --cov".into())),
    };
    let names = vertex_names(a, header, m)?;

    let policy = OrderPolicy::parse(&a.order);
    let order = policy.resolve(&g)?;
    let gw = g.relabel(&order);
    let data_w = DataSummary::new(data.n, order.permute_matrix(&data.s), data.centered)?;
    let loc = settings
        .location
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing key `u`".into()))?;
    let shape = settings
        .shape
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing key `alpha`".into()))?;
    let u = loc.resolve(m, Some(&data), &settings.base_dir)?;
    let prior_w = PriorSpec::new(order.permute_matrix(&u), shape.resolve(&gw)?)?;
    let post_w = posterior_update(&prior_w, &data_w)?;
    let cfg = settings.gibbs();
    log::info!("running {} + {} sweeps", cfg.burn_in, cfg.iterations);

    let result = match &a.trace {
        None => run_chain(&cfg, &post_w, &gw)?,
        Some(path) => {
            if cfg.chains > 1 {
                bail!(Error::InvalidConfig("--trace needs a single chain".into()));
            }
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            let mut failure: Option<std::io::Error> = None;
            writeln!(w, "{}", trace_header(&gw))?;
            let res = run_chain_observed(&cfg, &post_w, &gw, &mut |t, f| {
                if failure.is_none() {
                    if let Err(e) = writeln!(w, "{}", trace_row(&gw, t, f)) {
                        failure = Some(e);
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e).context("writing trace");
            }
            w.flush()?;
            res
        }
    };
    let mean = order.unpermute_matrix(&result.mean);
    let se = order.unpermute_matrix(&result.std_error);

    let mut r = Report::new("cgwish fit");
    r.section("provenance")
        .kv("command", "fit")
        .kv("graph", a.graph.display())
        .kv("data", &source)
        .kv("n", data.n)
        .kv("prior", a.prior.display())
        .kv("order_policy", policy.name())
        .kv(
            "order",
            order
                .sequence()
                .iter()
                .map(|&v| names[v].as_str())
                .collect::<Vec<_>>()
                .join(" "),
        );
    if let Some(p) = &a.trace {
        r.kv("trace", p.display());
    }
    r.section("config").raw(&settings.echo());
    r.section("posterior")
        .kv("alpha_tilde", format_vector(&order.unpermute_vector(&post_w.alpha)));
    r.diagnostics(&result.diagnostics);
    r.section("estimate")
        .matrix("posterior_mean", &names, &mean)
        .matrix("std_error", &names, &se);

    r.section("oracle");
    if !is_homogeneous(&g) {
        r.kv("status", "skipped: graph is not homogeneous");
    } else if !verify_order_in_sh(&gw, &VertexOrder::identity(m)) {
        r.kv("status", "skipped: sampling order is not a Hasse order");
    } else {
        match expected_sigma(&post_w, &gw) {
            Ok(e) => {
                r.kv("status", "compared")
                    .kv(
                        "relative_frobenius",
                        format!("{:.6e}", relative_frobenius(&result.mean, &e)),
                    )
                    .matrix("expected_sigma", &names, &order.unpermute_matrix(&e));
            }
            Err(e @ Error::MomentDoesNotExist { .. }) => {
                r.kv("status", format!("skipped: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    r.section("timing")
        .kv("wall_seconds", format!("{:.3}", start.elapsed().as_secs_f64()));
    let text = r.into_string();
    emit(&text, a.out.as_deref())?;
    Ok(Outcome::ok(text))
}

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<Outcome> {
    let (g, sigma, source) = if a.paper_sim50 {
        let g = sim50_graph();
        let s = sim50_sigma(&g);
        (g, s, "paper-sim50".to_string())
    } else {
        let gp = a.graph.as_ref().expect("clap requires --graph");
        let sp = a.sigma.as_ref().expect("clap requires --sigma");
        (load_graph(gp)?, read_symmetric_matrix(sp)?, sp.display().to_string())
    };
    let m = g.num_vertices();
    check_in_pg(&sigma, &g).context("true covariance")?;
    if a.n == 0 {
        bail!(Error::InsufficientData("--n must be at least 1".into()));
    }
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            index: 0,
            pivot: f64::NAN,
        })?
        .l();
    let mut rng = rng_stream(a.seed, 0);
    let mut y = DMatrix::zeros(a.n, m);
    for i in 0..a.n {
        let x = &chol * standard_normal_vector(m, &mut rng);
        y.row_mut(i).copy_from(&x.transpose());
    }
    let header: Option<Vec<String>> = a
        .header
        .then(|| (1..=m).map(|i| format!("v{i}")).collect());
    write_text(&a.out, &format_csv(&y, header.as_deref())?)?;
    if let Some(p) = &a.graph_out {
        write_text(p, &format_graph(&g))?;
    }
    let mut r = Report::new("cgwish simulate");
    r.section("provenance")
        .kv("command", "simulate")
        .kv("sigma", source)
        .kv("vertices", m)
        .kv("n", a.n)
        .kv("seed", a.seed)
        .kv("out", a.out.display());
    let text = r.into_string();
    print!("{text}");
    Ok(Outcome::ok(text))
}

pub fn oracle(a: &OracleArgs) -> anyhow::Result<Outcome> {
    let g = load_graph(&a.graph)?;
    if !is_homogeneous(&g) {
        return Err(Error::NotHomogeneous).context("oracle");
    }
    let m = g.num_vertices();
    let settings =
        read_config(&a.prior).with_context(|| format!("reading prior {}", a.prior.display()))?;
    let prior = settings.prior(&g, None)?;
    let log_z = log_normalizing_constant(&prior, &g)?;
    let layers = layer_sets(&g)?;
    let identity = VertexOrder::identity(m);
    let names: Vec<String> = (1..=m).map(|i| format!("v{i}")).collect();

    let mut r = Report::new("cgwish oracle");
    r.section("provenance")
        .kv("command", "oracle")
        .kv("graph", a.graph.display())
        .kv("prior", a.prior.display());
    r.section("config").raw(&settings.echo());
    r.section("oracle").kv(
        "working_order",
        if verify_order_in_sh(&g, &identity) {
            "given".to_string()
        } else {
            format!(
                "hasse {}",
                one_based(cgwish_core::hasse_order(&g)?.sequence())
            )
        },
    );
    for (k, l) in layers.layers.iter().enumerate() {
        r.kv(&format!("layer {}", k + 1), one_based(l));
    }
    r.kv("log_normalizing_constant", format!("{log_z:.12e}"));
    match expected_sigma(&prior, &g) {
        Ok(e) => {
            r.matrix("expected_sigma", &names, &e);
        }
        Err(e @ Error::MomentDoesNotExist { .. }) => {
            r.kv("expected_sigma", format!("unavailable: {e}"));
        }
        Err(e) => return Err(e.into()),
    }
    let text = r.into_string();
    emit(&text, a.out.as_deref())?;
    Ok(Outcome::ok(text))
}

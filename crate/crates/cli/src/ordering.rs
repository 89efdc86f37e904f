use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cgwish_core::datasets::yeast_alternate_order;
use cgwish_core::io::read_text;
use cgwish_core::{
    hasse_order, is_homogeneous, perfect_vertex_order, verify_order_in_sd, Error, Graph,
    VertexOrder,
};

/// How the sampler's vertex order is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum OrderPolicy {
    /// The graph file's labels, which must already be a perfect order.
    Given,
    /// The file's labels when they are a perfect order, otherwise a computed one.
    Auto,
    /// The Hasse order; homogeneous graphs only.
    Hasse,
    YeastPrimary,
    YeastAlternate,
    /// Vertices listed (1-based) in their new order.
    File(PathBuf),
}

impl OrderPolicy {
    pub fn parse(s: &str) -> Self {
        match s {
            "given" => OrderPolicy::Given,
            "auto" => OrderPolicy::Auto,
            "hasse" => OrderPolicy::Hasse,
            "yeast-primary" => OrderPolicy::YeastPrimary,
            "yeast-alternate" => OrderPolicy::YeastAlternate,
            path => OrderPolicy::File(PathBuf::from(path)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            OrderPolicy::Given => "given".into(),
            OrderPolicy::Auto => "auto".into(),
            OrderPolicy::Hasse => "hasse".into(),
            OrderPolicy::YeastPrimary => "yeast-primary".into(),
            OrderPolicy::YeastAlternate => "yeast-alternate".into(),
            OrderPolicy::File(p) => p.display().to_string(),
        }
    }

    /// The order to use on `g`, checked to be a perfect elimination order.
    pub fn resolve(&self, g: &Graph) -> anyhow::Result<VertexOrder> {
        let m = g.num_vertices();
        let identity = VertexOrder::identity(m);
        let order = match self {
            OrderPolicy::Given | OrderPolicy::YeastPrimary => identity,
            OrderPolicy::Auto => {
                if verify_order_in_sd(g, &identity) {
                    identity
                } else {
                    perfect_vertex_order(g)?
                }
            }
            OrderPolicy::Hasse => {
                if !is_homogeneous(g) {
                    return Err(Error::NotHomogeneous).context("--order hasse");
                }
                hasse_order(g)?
            }
            OrderPolicy::YeastAlternate => {
                if m != 8 {
                    return Err(Error::DimensionMismatch {
                        expected: 8,
                        found: m,
                    })
                    .context("--order yeast-alternate needs the 8-gene graph");
                }
                yeast_alternate_order()
            }
            OrderPolicy::File(p) => read_order(p, m)?,
        };
        if !verify_order_in_sd(g, &order) {
            if !cgwish_core::is_decomposable(g) {
                return Err(Error::NotDecomposable.into());
            }
            return Err(Error::InvalidOrdering(format!(
                "order `{}` is not a perfect elimination order of the graph",
                self.name()
            ))
            .into());
        }
        Ok(order)
    }
}

fn read_order(path: &Path, m: usize) -> anyhow::Result<VertexOrder> {
    let text = read_text(path)?;
    let mut seq = Vec::with_capacity(m);
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("`{tok}` is not a vertex number"),
            })?;
            if v == 0 || v > m {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("vertex {v} outside 1..={m}"),
                })
                .with_context(|| path.display().to_string());
            }
            seq.push(v - 1);
        }
    }
    if seq.len() != m {
        bail!(Error::InvalidOrdering(format!(
            "{} lists {} vertices, expected {m}",
            path.display(),
            seq.len()
        )));
    }
    Ok(VertexOrder::from_sequence(seq)?)
}

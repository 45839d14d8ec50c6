//! Line-oriented manifold spec files.
//!
//! A spec file is a sequence of `key = value` statements, one per line, with
//! `#` starting a comment (outside quotes). Scalar keys configure the
//! manifold as a whole:
//!
//! ```text
//! name = conf-flat
//! dimension = 4
//! mode = chart            # chart | frame
//! coords = x y u v
//! connection = levi-civita  # levi-civita | explicit | levi-civita-plus-S
//! sample_points = 32
//! sample_box = -1 1 -1 1 -1 1 -1 1
//! ```
//!
//! Tensor components are set entry by entry with 1-based indices; every
//! omitted component is zero. Expression values are double-quoted; frame
//! structure constants are bare numbers:
//!
//! ```text
//! g(1,1) = "exp(0.2*x*y)"
//! J1(1,3) = "-1"
//! Gamma(1,2,3) = "x^2"     # connection = explicit
//! S(1,2,3) = "0.5"         # connection = levi-civita-plus-S
//! c(3,1,2) = 1             # mode = frame
//! ```
//!
//! Two conveniences keep hand-written files short: a metric entry given on
//! one side of the diagonal is mirrored to the other, and a structure
//! constant is mirrored with a sign flip to its antisymmetric partner. Both
//! apply only when the partner slot is not itself written.
//!
//! Loading validates the assembled spec structurally and then probes it at
//! the sample-box center, so a degenerate or wrongly-signed metric is
//! diagnosed at load time rather than as a pile of skipped points later.

use pqgeo_core::expr::{constant, parse_expr, ScalarExpr};
use pqgeo_core::geometry::{
    ConnectionSpec, ExprMatrix, ExprTensor3, GeomError, ManifoldSpec, Mode,
};
use pqgeo_core::tensor::Tensor3;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Missing(String),
    #[error("{0}")]
    Structure(#[from] GeomError),
    #[error("spec rejected at the sample-box center: {0}")]
    CenterProbe(GeomError),
}

fn err(line: usize, msg: impl Into<String>) -> SpecFileError {
    SpecFileError::Line {
        line,
        msg: msg.into(),
    }
}

/// One `key = value` statement, indices still unchecked.
struct Statement {
    line: usize,
    key: String,
    indices: Vec<usize>,
    value: String,
}

/// Strip the comment tail: everything from the first `#` that is not inside
/// a quoted string.
fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (pos, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..pos],
            _ => {}
        }
    }
    line
}

fn tokenize(text: &str) -> Result<Vec<Statement>, SpecFileError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (lhs, rhs) = body
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let lhs = lhs.trim();
        let value = rhs.trim().to_string();
        let (key, indices) = match lhs.split_once('(') {
            None => (lhs.to_string(), Vec::new()),
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| err(line, format!("unclosed index list in `{lhs}`")))?;
                let indices = inner
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<usize>().map_err(|_| {
                            err(line, format!("index `{}` is not a positive integer", t.trim()))
                        })
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                (name.trim().to_string(), indices)
            }
        };
        if key.is_empty() {
            return Err(err(line, "missing key before `=`"));
        }
        out.push(Statement {
            line,
            key,
            indices,
            value,
        });
    }
    Ok(out)
}

/// Unwrap a double-quoted expression value.
fn unquote(stmt: &Statement) -> Result<&str, SpecFileError> {
    let v = stmt.value.as_str();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        Ok(&v[1..v.len() - 1])
    } else {
        Err(err(
            stmt.line,
            format!(
                "{} takes a quoted expression, e.g. {}(1,1) = \"x^2\"",
                stmt.key, stmt.key
            ),
        ))
    }
}

fn check_arity(stmt: &Statement, want: usize) -> Result<(), SpecFileError> {
    if stmt.indices.len() == want {
        Ok(())
    } else {
        Err(err(
            stmt.line,
            format!("{} takes {} indices", stmt.key, want),
        ))
    }
}

fn check_range(stmt: &Statement, dim: usize) -> Result<(), SpecFileError> {
    for &i in &stmt.indices {
        if i == 0 || i > dim {
            return Err(err(
                stmt.line,
                format!("index {i} out of range 1..={dim}"),
            ));
        }
    }
    Ok(())
}

/// Scalar configuration keys, collected in the first pass.
#[derive(Default)]
struct Config {
    name: Option<(usize, String)>,
    dimension: Option<(usize, usize)>,
    mode: Option<(usize, Mode)>,
    coords: Option<(usize, Vec<String>)>,
    connection: Option<(usize, String)>,
    sample_points: Option<(usize, usize)>,
    sample_box: Option<(usize, Vec<f64>)>,
}

fn set_once<T>(slot: &mut Option<(usize, T)>, line: usize, key: &str, v: T) -> Result<(), SpecFileError> {
    if slot.is_some() {
        return Err(err(line, format!("duplicate `{key}`")));
    }
    *slot = Some((line, v));
    Ok(())
}

/// A tensor entry waiting for the coordinate list before its expression can
/// be parsed.
struct PendingEntry {
    line: usize,
    indices: Vec<usize>,
    src: String,
}

#[derive(Default)]
struct Pending {
    g: Vec<PendingEntry>,
    j: [Vec<PendingEntry>; 3],
    gamma: Vec<PendingEntry>,
    s: Vec<PendingEntry>,
    c: Vec<(usize, Vec<usize>, f64)>,
}

fn is_zero(e: &ScalarExpr, dim: usize) -> bool {
    e.is_constant() && e.eval(&vec![0.0; dim]).map_or(false, |v| v == 0.0)
}

/// Parse spec-file text. `default_name` is used when the file has no
/// `name` line (the loader passes the file stem).
pub fn parse_spec_str(text: &str, default_name: &str) -> Result<ManifoldSpec, SpecFileError> {
    let statements = tokenize(text)?;
    let mut config = Config::default();
    let mut pending = Pending::default();

    for stmt in &statements {
        let line = stmt.line;
        match stmt.key.as_str() {
            "name" => set_once(&mut config.name, line, "name", stmt.value.clone())?,
            "dimension" => {
                let d: usize = stmt
                    .value
                    .parse()
                    .map_err(|_| err(line, format!("bad dimension `{}`", stmt.value)))?;
                if d == 0 || d % 4 != 0 {
                    return Err(err(
                        line,
                        format!("dimension must be a positive multiple of 4, got {d}"),
                    ));
                }
                set_once(&mut config.dimension, line, "dimension", d)?;
            }
            "mode" => {
                let m = match stmt.value.as_str() {
                    "chart" => Mode::Chart,
                    "frame" => Mode::Frame,
                    other => {
                        return Err(err(line, format!("mode is chart or frame, got `{other}`")))
                    }
                };
                set_once(&mut config.mode, line, "mode", m)?;
            }
            "coords" => {
                let names: Vec<String> =
                    stmt.value.split_whitespace().map(str::to_string).collect();
                if names.is_empty() {
                    return Err(err(line, "coords needs at least one name"));
                }
                set_once(&mut config.coords, line, "coords", names)?;
            }
            "connection" => {
                match stmt.value.as_str() {
                    "levi-civita" | "explicit" | "levi-civita-plus-S" => {}
                    other => {
                        return Err(err(
                            line,
                            format!(
                                "connection is levi-civita, explicit, or \
                                 levi-civita-plus-S, got `{other}`"
                            ),
                        ))
                    }
                }
                set_once(&mut config.connection, line, "connection", stmt.value.clone())?;
            }
            "sample_points" => {
                let n: usize = stmt
                    .value
                    .parse()
                    .map_err(|_| err(line, format!("bad sample_points `{}`", stmt.value)))?;
                if n == 0 {
                    return Err(err(line, "sample_points must be at least 1"));
                }
                set_once(&mut config.sample_points, line, "sample_points", n)?;
            }
            "sample_box" => {
                let nums = stmt
                    .value
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(line, format!("bad number `{t}` in sample_box")))
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                set_once(&mut config.sample_box, line, "sample_box", nums)?;
            }
            "g" | "J1" | "J2" | "J3" => {
                check_arity(stmt, 2)?;
                let src = unquote(stmt)?.to_string();
                let entry = PendingEntry {
                    line,
                    indices: stmt.indices.clone(),
                    src,
                };
                match stmt.key.as_str() {
                    "g" => pending.g.push(entry),
                    "J1" => pending.j[0].push(entry),
                    "J2" => pending.j[1].push(entry),
                    "J3" => pending.j[2].push(entry),
                    _ => unreachable!(),
                }
            }
            "Gamma" | "S" => {
                check_arity(stmt, 3)?;
                let src = unquote(stmt)?.to_string();
                let entry = PendingEntry {
                    line,
                    indices: stmt.indices.clone(),
                    src,
                };
                if stmt.key == "Gamma" {
                    pending.gamma.push(entry);
                } else {
                    pending.s.push(entry);
                }
            }
            "c" => {
                check_arity(stmt, 3)?;
                let v: f64 = stmt
                    .value
                    .parse()
                    .map_err(|_| {
                        err(line, format!("c takes a bare number, got `{}`", stmt.value))
                    })?;
                pending.c.push((line, stmt.indices.clone(), v));
            }
            other => return Err(err(line, format!("unknown key `{other}`"))),
        }
    }

    let (_, dim) = config
        .dimension
        .ok_or_else(|| SpecFileError::Missing("spec has no `dimension` line".into()))?;
    let mode = config.mode.map(|(_, m)| m).unwrap_or(Mode::Chart);
    let coords = match (&config.coords, mode) {
        (Some((line, names)), _) => {
            if names.len() != dim {
                return Err(err(
                    *line,
                    format!("coords lists {} names for dimension {dim}", names.len()),
                ));
            }
            names.clone()
        }
        (None, Mode::Frame) => (1..=dim).map(|i| format!("x{i}")).collect(),
        (None, Mode::Chart) => {
            return Err(SpecFileError::Missing(
                "chart mode needs a `coords` line".into(),
            ))
        }
    };

    let connection_kind = config
        .connection
        .map(|(_, c)| c)
        .unwrap_or_else(|| "levi-civita".to_string());
    if !pending.gamma.is_empty() && connection_kind != "explicit" {
        return Err(err(
            pending.gamma[0].line,
            "Gamma entries need `connection = explicit`",
        ));
    }
    if !pending.s.is_empty() && connection_kind != "levi-civita-plus-S" {
        return Err(err(
            pending.s[0].line,
            "S entries need `connection = levi-civita-plus-S`",
        ));
    }
    if !pending.c.is_empty() && mode != Mode::Frame {
        return Err(err(
            pending.c[0].0,
            "c entries need `mode = frame`",
        ));
    }

    let parse = |entry: &PendingEntry| -> Result<ScalarExpr, SpecFileError> {
        check_range(
            &Statement {
                line: entry.line,
                key: String::new(),
                indices: entry.indices.clone(),
                value: String::new(),
            },
            dim,
        )?;
        parse_expr(&entry.src, &coords)
            .map_err(|e| err(entry.line, format!("in expression: {e}")))
    };

    // Matrices: zero-filled, then explicit entries, then metric mirroring.
    let mut g: ExprMatrix = vec![vec![constant(0.0); dim]; dim];
    let mut g_set = vec![vec![false; dim]; dim];
    for entry in &pending.g {
        let e = parse(entry)?;
        let (i, j) = (entry.indices[0] - 1, entry.indices[1] - 1);
        if g_set[i][j] {
            return Err(err(
                entry.line,
                format!("g({},{}) set twice", i + 1, j + 1),
            ));
        }
        g_set[i][j] = true;
        g[i][j] = e;
    }
    for i in 0..dim {
        for j in 0..dim {
            if g_set[i][j] && !g_set[j][i] {
                g[j][i] = g[i][j].clone();
            }
        }
    }

    let mut j_mats: [ExprMatrix; 3] = std::array::from_fn(|_| vec![vec![constant(0.0); dim]; dim]);
    for (a, entries) in pending.j.iter().enumerate() {
        let mut set = vec![vec![false; dim]; dim];
        for entry in entries {
            let e = parse(entry)?;
            let (i, j) = (entry.indices[0] - 1, entry.indices[1] - 1);
            if set[i][j] {
                return Err(err(
                    entry.line,
                    format!("J{}({},{}) set twice", a + 1, i + 1, j + 1),
                ));
            }
            set[i][j] = true;
            j_mats[a][i][j] = e;
        }
    }

    let tensor3 = |entries: &[PendingEntry], what: &str| -> Result<ExprTensor3, SpecFileError> {
        let mut t: ExprTensor3 = vec![vec![vec![constant(0.0); dim]; dim]; dim];
        let mut set = vec![false; dim * dim * dim];
        for entry in entries {
            let e = parse(entry)?;
            let (i, j, k) = (
                entry.indices[0] - 1,
                entry.indices[1] - 1,
                entry.indices[2] - 1,
            );
            let flat = (i * dim + j) * dim + k;
            if set[flat] {
                return Err(err(
                    entry.line,
                    format!("{what}({},{},{}) set twice", i + 1, j + 1, k + 1),
                ));
            }
            set[flat] = true;
            t[i][j][k] = e;
        }
        Ok(t)
    };

    let connection = match connection_kind.as_str() {
        "levi-civita" => ConnectionSpec::LeviCivita,
        "explicit" => ConnectionSpec::Explicit {
            gamma: tensor3(&pending.gamma, "Gamma")?,
        },
        "levi-civita-plus-S" => ConnectionSpec::LeviCivitaPlusS {
            s: tensor3(&pending.s, "S")?,
        },
        _ => unreachable!("validated above"),
    };

    let c = match mode {
        Mode::Chart => None,
        Mode::Frame => {
            let mut c = Tensor3::zeros(dim);
            let mut set = vec![false; dim * dim * dim];
            for (line, indices, v) in &pending.c {
                let stmt = Statement {
                    line: *line,
                    key: "c".into(),
                    indices: indices.clone(),
                    value: String::new(),
                };
                check_range(&stmt, dim)?;
                let (i, j, k) = (indices[0] - 1, indices[1] - 1, indices[2] - 1);
                if j == k && *v != 0.0 {
                    return Err(err(
                        *line,
                        format!("c({},{},{}) must vanish: structure constants are antisymmetric", i + 1, j + 1, k + 1),
                    ));
                }
                let flat = (i * dim + j) * dim + k;
                if set[flat] {
                    return Err(err(
                        *line,
                        format!("c({},{},{}) set twice", i + 1, j + 1, k + 1),
                    ));
                }
                set[flat] = true;
                c.set(i, j, k, *v);
            }
            // Antisymmetric completion for slots the file leaves implicit.
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        let flat = (i * dim + j) * dim + k;
                        let mirror = (i * dim + k) * dim + j;
                        if set[flat] && !set[mirror] {
                            c.set(i, k, j, -c.get(i, j, k));
                        }
                    }
                }
            }
            Some(c)
        }
    };

    let sample_box = match config.sample_box {
        None => vec![(-1.0, 1.0); dim],
        Some((line, nums)) => {
            if nums.len() != 2 * dim {
                return Err(err(
                    line,
                    format!(
                        "sample_box needs {} numbers (lo hi per coordinate), got {}",
                        2 * dim,
                        nums.len()
                    ),
                ));
            }
            let mut pairs = Vec::with_capacity(dim);
            for k in 0..dim {
                let (lo, hi) = (nums[2 * k], nums[2 * k + 1]);
                if !(lo < hi) {
                    return Err(err(
                        line,
                        format!("sample_box interval {} is empty: {lo} .. {hi}", k + 1),
                    ));
                }
                pairs.push((lo, hi));
            }
            pairs
        }
    };

    let spec = ManifoldSpec {
        name: config
            .name
            .map(|(_, n)| n)
            .unwrap_or_else(|| default_name.to_string()),
        dim,
        mode,
        coords,
        g,
        j: j_mats,
        connection,
        c,
        sample_box,
        sample_points: config.sample_points.map(|(_, n)| n).unwrap_or(32),
    };
    spec.validate()?;
    // A load-time probe at the box center turns a degenerate metric or a
    // non-evaluable entry into an immediate diagnostic.
    spec.frame_at(&spec.box_center())
        .map_err(SpecFileError::CenterProbe)?;
    Ok(spec)
}

/// Load and fully validate a spec file.
pub fn load_spec(path: &Path) -> Result<ManifoldSpec, SpecFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "spec".to_string());
    parse_spec_str(&text, &stem)
}

/// Render a spec as file text that [`parse_spec_str`] accepts and parses
/// back to an equivalent spec. Zero components are omitted.
pub fn emit_spec(spec: &ManifoldSpec) -> String {
    use std::fmt::Write;
    let dim = spec.dim;
    let mut out = String::new();
    writeln!(out, "name = {}", spec.name).unwrap();
    writeln!(out, "dimension = {dim}").unwrap();
    let mode = match spec.mode {
        Mode::Chart => "chart",
        Mode::Frame => "frame",
    };
    writeln!(out, "mode = {mode}").unwrap();
    writeln!(out, "coords = {}", spec.coords.join(" ")).unwrap();
    writeln!(out, "connection = {}", spec.connection.kind_name()).unwrap();
    writeln!(out, "sample_points = {}", spec.sample_points).unwrap();
    let mut box_parts = Vec::with_capacity(2 * dim);
    for (lo, hi) in &spec.sample_box {
        box_parts.push(format!("{lo}"));
        box_parts.push(format!("{hi}"));
    }
    writeln!(out, "sample_box = {}", box_parts.join(" ")).unwrap();

    let write_matrix = |out: &mut String, key: &str, m: &ExprMatrix| {
        let mut wrote = false;
        for i in 0..dim {
            for j in 0..dim {
                if is_zero(&m[i][j], dim) {
                    continue;
                }
                if !wrote {
                    out.push('\n');
                    wrote = true;
                }
                writeln!(
                    out,
                    "{key}({},{}) = \"{}\"",
                    i + 1,
                    j + 1,
                    m[i][j].serialize(&spec.coords)
                )
                .unwrap();
            }
        }
    };
    write_matrix(&mut out, "g", &spec.g);
    for (a, m) in spec.j.iter().enumerate() {
        write_matrix(&mut out, &format!("J{}", a + 1), m);
    }

    let write_tensor = |out: &mut String, key: &str, t: &ExprTensor3| {
        let mut wrote = false;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if is_zero(&t[i][j][k], dim) {
                        continue;
                    }
                    if !wrote {
                        out.push('\n');
                        wrote = true;
                    }
                    writeln!(
                        out,
                        "{key}({},{},{}) = \"{}\"",
                        i + 1,
                        j + 1,
                        k + 1,
                        t[i][j][k].serialize(&spec.coords)
                    )
                    .unwrap();
                }
            }
        }
    };
    match &spec.connection {
        ConnectionSpec::LeviCivita => {}
        ConnectionSpec::Explicit { gamma } => write_tensor(&mut out, "Gamma", gamma),
        ConnectionSpec::LeviCivitaPlusS { s } => write_tensor(&mut out, "S", s),
    }

    if let Some(c) = &spec.c {
        let mut wrote = false;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let v = c.get(i, j, k);
                    if v == 0.0 {
                        continue;
                    }
                    if !wrote {
                        out.push('\n');
                        wrote = true;
                    }
                    writeln!(out, "c({},{},{}) = {v}", i + 1, j + 1, k + 1).unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pqgeo_core::catalog::{catalog_entries, catalog_spec};

    const FLAT: &str = r#"
# a flat neutral chart
name = flat
dimension = 4
mode = chart
coords = x y u v
g(1,1) = "1"
g(2,2) = "1"
g(3,3) = "-1"
g(4,4) = "-1"
J1(1,3) = "-1"   # comment after a quoted value
J1(2,4) = "1"
J1(3,1) = "-1"
J1(4,2) = "1"
J2(1,4) = "-1"
J2(2,3) = "-1"
J2(3,2) = "-1"
J2(4,1) = "-1"
J3(1,2) = "1"
J3(2,1) = "-1"
J3(3,4) = "1"
J3(4,3) = "-1"
"#;

    #[test]
    fn parses_a_flat_chart_with_defaults() {
        let spec = parse_spec_str(FLAT, "fallback").unwrap();
        assert_eq!(spec.name, "flat");
        assert_eq!(spec.dim, 4);
        assert_eq!(spec.sample_points, 32);
        assert_eq!(spec.sample_box, vec![(-1.0, 1.0); 4]);
        assert!(matches!(spec.connection, ConnectionSpec::LeviCivita));
        let f = spec.frame_at(&[0.3, -0.2, 0.1, 0.9]).unwrap();
        assert_eq!(f.g[(0, 0)], 1.0);
        assert_eq!(f.j[0][(0, 2)], -1.0);
    }

    #[test]
    fn missing_metric_entry_is_a_center_probe_diagnostic() {
        // Drop g(1,1): the metric defaults to 0 there and the signature
        // probe at the box center must reject the file.
        let text = FLAT.replace("g(1,1) = \"1\"\n", "");
        let e = parse_spec_str(&text, "x").unwrap_err();
        match e {
            SpecFileError::CenterProbe(inner) => {
                let msg = inner.to_string();
                assert!(
                    msg.contains("singular") || msg.contains("signature"),
                    "unhelpful diagnostic: {msg}"
                );
            }
            other => panic!("expected a center-probe error, got {other}"),
        }
    }

    #[test]
    fn dimension_six_is_rejected() {
        let e = parse_spec_str("dimension = 6\n", "x").unwrap_err();
        assert!(e.to_string().contains("multiple of 4"), "{e}");
    }

    #[test]
    fn line_numbers_point_at_the_offending_statement() {
        let text = "dimension = 4\nmode = chart\ncoords = x y u v\nbogus = 1\n";
        let e = parse_spec_str(text, "x").unwrap_err();
        assert_eq!(e.to_string(), "line 4: unknown key `bogus`");

        let text = FLAT.replace("J3(4,3) = \"-1\"", "J3(5,3) = \"-1\"");
        let e = parse_spec_str(&text, "x").unwrap_err();
        assert!(e.to_string().contains("out of range 1..=4"), "{e}");

        let text = FLAT.replace("g(2,2) = \"1\"", "g(2,2) = 1");
        let e = parse_spec_str(&text, "x").unwrap_err();
        assert!(e.to_string().contains("quoted expression"), "{e}");
    }

    #[test]
    fn metric_mirroring_fills_the_lower_triangle() {
        let text = "dimension = 4\nmode = frame\n\
                    g(1,4) = \"1\"\ng(2,3) = \"-1\"\n\
                    J1(1,1) = \"1\"\nJ1(2,2) = \"1\"\nJ1(3,3) = \"-1\"\nJ1(4,4) = \"-1\"\n\
                    J3(3,1) = \"1\"\nJ3(4,2) = \"1\"\nJ3(1,3) = \"-1\"\nJ3(2,4) = \"-1\"\n\
                    J2(3,1) = \"1\"\nJ2(4,2) = \"1\"\nJ2(1,3) = \"1\"\nJ2(2,4) = \"1\"\n";
        let spec = parse_spec_str(text, "mirrored").unwrap();
        let f = spec.frame_at(&spec.box_center()).unwrap();
        assert_eq!(f.g[(3, 0)], 1.0);
        assert_eq!(f.g[(2, 1)], -1.0);
    }

    #[test]
    fn structure_constants_complete_antisymmetrically() {
        let text = "dimension = 4\nmode = frame\nconnection = levi-civita\n\
                    g(1,4) = \"1\"\ng(2,3) = \"-1\"\n\
                    J1(1,1) = \"1\"\nJ1(2,2) = \"1\"\nJ1(3,3) = \"-1\"\nJ1(4,4) = \"-1\"\n\
                    J3(3,1) = \"1\"\nJ3(4,2) = \"1\"\nJ3(1,3) = \"-1\"\nJ3(2,4) = \"-1\"\n\
                    J2(3,1) = \"1\"\nJ2(4,2) = \"1\"\nJ2(1,3) = \"1\"\nJ2(2,4) = \"1\"\n\
                    c(2,1,2) = 1\nc(3,1,3) = 1\nc(4,1,4) = 1\n";
        let spec = parse_spec_str(text, "x").unwrap();
        let c = spec.c.as_ref().unwrap();
        assert_eq!(c.get(1, 1, 0), -1.0);
        assert_eq!(c.get(3, 3, 0), -1.0);
    }

    #[test]
    fn every_catalog_entry_round_trips_through_emission() {
        for entry in catalog_entries() {
            let text = emit_spec(&entry.spec);
            let reparsed = parse_spec_str(&text, "ignored")
                .unwrap_or_else(|e| panic!("{} does not reload: {e}", entry.name));
            assert_eq!(reparsed.name, entry.spec.name);
            // Double emission is byte-stable, which is the round-trip
            // equivalence we rely on for golden files.
            assert_eq!(emit_spec(&reparsed), text, "{}", entry.name);
        }
    }

    #[test]
    fn emitted_flat_r4_has_no_connection_block() {
        let text = emit_spec(&catalog_spec("flat-r4").unwrap());
        assert!(!text.contains("Gamma("));
        assert!(!text.contains("S("));
        assert!(!text.contains("c("));
    }
}

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{LpError, Result};
use crate::model::{LinearModel, ObjSense, RowSense, VarId, VarKind};

const OBJ_ROW: &str = "OBJ";

/// Eight-character names used in an exported MPS file, index-aligned with the
/// model's variables and rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpsNames {
    pub cols: Vec<String>,
    pub rows: Vec<String>,
}

impl MpsNames {
    pub fn new(model: &LinearModel) -> Self {
        let cols = unique_short(model.vars.iter().map(|v| v.name.as_str()), &[]);
        let rows = unique_short(model.rows.iter().map(|r| r.name.as_str()), &[OBJ_ROW]);
        Self { cols, rows }
    }

    /// Rewrites `short value` lines from an external solver into model labels.
    pub fn translate_solution(&self, model: &LinearModel, text: &str) -> Result<String> {
        let back: HashMap<&str, &str> =
            self.cols.iter().map(String::as_str).zip(model.vars.iter().map(|v| v.name.as_str())).collect();
        let mut out = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
                return Err(LpError::Parse {
                    line: lineno + 1,
                    message: format!("expected `name value`, got `{line}`"),
                });
            };
            let label = back
                .get(name)
                .ok_or_else(|| LpError::Parse { line: lineno + 1, message: format!("unknown variable `{name}`") })?;
            let _ = writeln!(out, "{label} {value}");
        }
        Ok(out)
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name.chars().filter(|c| c.is_ascii_graphic()).take(8).collect();
    if s.is_empty() {
        "_".to_string()
    } else {
        s
    }
}

fn unique_short<'a>(names: impl Iterator<Item = &'a str>, reserved: &[&str]) -> Vec<String> {
    let mut taken: HashSet<String> = reserved.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    let mut counter = 0usize;
    for name in names {
        let base = sanitize(name);
        let mut candidate = base.clone();
        while taken.contains(&candidate) {
            let suffix = format!("~{}", to_base36(counter));
            counter += 1;
            let keep = 8usize.saturating_sub(suffix.len());
            candidate = format!("{}{}", &base[..keep.min(base.len())], suffix);
        }
        taken.insert(candidate.clone());
        out.push(candidate);
    }
    out
}

fn to_base36(mut n: usize) -> String {
    const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
    let mut s = Vec::new();
    loop {
        s.push(DIGITS[n % 36]);
        n /= 36;
        if n == 0 {
            break;
        }
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

fn field_line(out: &mut String, kind: &str, a: &str, b: &str, v: f64) {
    let _ = writeln!(out, " {kind:<2} {a:<8}  {b:<8}  {v}");
}

/// Writes `model` in fixed-format MPS.
///
/// Names are the eight-character forms from [`MpsNames`]. Binary columns sit
/// between `INTORG`/`INTEND` markers and receive `BV` bounds. Values use the
/// shortest decimal form that round-trips, so a long value may run past its
/// nominal field width. The objective constant appears as the negated
/// right-hand side of the objective row.
pub fn export_mps(model: &LinearModel) -> String {
    let names = MpsNames::new(model);
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", sanitize(&model.name));
    if model.sense == ObjSense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (i, r) in model.rows.iter().enumerate() {
        let k = match r.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        let _ = writeln!(out, " {k}  {}", names.rows[i]);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    let mut obj = vec![0.0; model.num_vars()];
    for &(v, c) in &model.objective {
        obj[v.0] += c;
    }
    for (i, r) in model.rows.iter().enumerate() {
        for &(v, a) in &r.coeffs {
            by_col[v.0].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (j, var) in model.vars.iter().enumerate() {
        let is_bin = var.kind == VarKind::Binary;
        if is_bin != in_int {
            let tag = if is_bin { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{marker:<7}  'MARKER'                 {tag}");
            marker += 1;
            in_int = is_bin;
        }
        let c = &names.cols[j];
        if obj[j] != 0.0 || by_col[j].is_empty() {
            field_line(&mut out, "", c, OBJ_ROW, obj[j]);
        }
        for &(i, a) in &by_col[j] {
            field_line(&mut out, "", c, &names.rows[i], a);
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{marker:<7}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    if model.objective_constant != 0.0 {
        field_line(&mut out, "", "RHS", OBJ_ROW, -model.objective_constant);
    }
    for (i, r) in model.rows.iter().enumerate() {
        if r.rhs != 0.0 {
            field_line(&mut out, "", "RHS", &names.rows[i], r.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for (j, var) in model.vars.iter().enumerate() {
        let c = &names.cols[j];
        let (lo, up) = (var.lower, var.upper);
        if var.kind == VarKind::Binary && lo == 0.0 && up == 1.0 {
            field_line(&mut out, "BV", "BND", c, 1.0);
        } else if lo == up {
            field_line(&mut out, "FX", "BND", c, lo);
        } else if lo == f64::NEG_INFINITY && up == f64::INFINITY {
            let _ = writeln!(out, " FR BND       {c}");
        } else {
            if lo == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND       {c}");
            } else if lo != 0.0 || up.is_finite() {
                field_line(&mut out, "LO", "BND", c, lo);
            }
            if up.is_finite() {
                field_line(&mut out, "UP", "BND", c, up);
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Reads an MPS file written by [`export_mps`] (or any free/fixed MPS without
/// RANGES). Fields are split on whitespace, so names must not contain spaces.
pub fn parse_mps(text: &str) -> Result<LinearModel> {
    let mut model = LinearModel::new("", ObjSense::Minimize);
    let mut section = Section::None;
    let mut obj_name: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_defs: Vec<(String, RowSense)> = Vec::new();
    let mut row_coeffs: Vec<Vec<(VarId, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut col_index: HashMap<String, VarId> = HashMap::new();
    let mut objective: Vec<(VarId, f64)> = Vec::new();
    let mut constant = 0.0;
    let mut integer = false;

    let err = |line: usize, message: String| LpError::Parse { line, message };
    let num = |line: usize, s: &str| s.parse::<f64>().map_err(|_| err(line, format!("bad number `{s}`")));

    for (lineno, raw) in text.lines().enumerate() {
        let ln = lineno + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "OBJSENSE" => {
                    if let Some(s) = fields.get(1) {
                        model.sense = if s.starts_with("MAX") { ObjSense::Maximize } else { ObjSense::Minimize };
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(ln, format!("unsupported section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => {
                model.sense = if fields[0].starts_with("MAX") { ObjSense::Maximize } else { ObjSense::Minimize };
            }
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(err(ln, "row line needs a type and a name".into()));
                }
                let sense = match fields[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(fields[1].to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(err(ln, format!("unknown row type `{t}`"))),
                };
                row_index.insert(fields[1].to_string(), row_defs.len());
                row_defs.push((fields[1].to_string(), sense));
                row_coeffs.push(Vec::new());
                rhs.push(0.0);
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    integer = fields[2] == "'INTORG'";
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(ln, "column line needs 3 or 5 fields".into()));
                }
                let col = match col_index.get(fields[0]) {
                    Some(&v) => v,
                    None => {
                        let kind = if integer { VarKind::Binary } else { VarKind::Continuous };
                        let up = if integer { 1.0 } else { f64::INFINITY };
                        let v = model.add_var(fields[0], 0.0, up, kind);
                        col_index.insert(fields[0].to_string(), v);
                        v
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let val = num(ln, pair[1])?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        objective.push((col, val));
                    } else {
                        let &i = row_index.get(pair[0]).ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        row_coeffs[i].push((col, val));
                    }
                }
            }
            Section::Rhs => {
                let pairs = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(ln, "rhs line has an odd field count".into()));
                    }
                    let val = num(ln, pair[1])?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        constant = -val;
                    } else {
                        let &i = row_index.get(pair[0]).ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        rhs[i] = val;
                    }
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(ln, "bound line too short".into()));
                }
                let kind = fields[0];
                let &col =
                    col_index.get(fields[2]).ok_or_else(|| err(ln, format!("unknown column `{}`", fields[2])))?;
                let value = fields.get(3).map(|s| num(ln, s)).transpose()?;
                let need = || value.ok_or_else(|| err(ln, format!("bound `{kind}` needs a value")));
                let var = model.var_mut(col);
                match kind {
                    "UP" => var.upper = need()?,
                    "LO" => var.lower = need()?,
                    "FX" => {
                        let v = need()?;
                        var.lower = v;
                        var.upper = v;
                    }
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    "BV" => {
                        var.kind = VarKind::Binary;
                        var.lower = 0.0;
                        var.upper = 1.0;
                    }
                    other => return Err(err(ln, format!("unsupported bound type `{other}`"))),
                }
            }
            Section::None => return Err(err(ln, "data line outside any section".into())),
        }
    }
    for (i, (name, sense)) in row_defs.into_iter().enumerate() {
        model.add_row(name, std::mem::take(&mut row_coeffs[i]), sense, rhs[i]);
    }
    model.set_objective(objective, constant);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_has_every_section() {
        let text = export_mps(&LinearModel::new("empty", ObjSense::Minimize));
        for s in ["NAME", "ROWS", "COLUMNS", "RHS", "ENDATA"] {
            assert!(text.lines().any(|l| l.starts_with(s)), "missing {s}:\n{text}");
        }
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.num_vars(), 0);
    }

    #[test]
    fn long_names_are_truncated_without_collisions() {
        let mut m = LinearModel::new("n", ObjSense::Minimize);
        for _ in 0..40 {
            m.add_nonneg("omega[1][2][3]");
        }
        let names = MpsNames::new(&m);
        let set: HashSet<_> = names.cols.iter().collect();
        assert_eq!(set.len(), 40);
        assert!(names.cols.iter().all(|n| n.len() <= 8));
    }

    #[test]
    fn binaries_are_marked_and_bounded() {
        let mut m = LinearModel::new("b", ObjSense::Maximize);
        let x = m.add_binary("x");
        let y = m.add_continuous("y", -1.0, 2.5);
        m.add_row("r", [(x, 1.0), (y, 0.1)], RowSense::Le, 1.0);
        m.set_objective([(x, 1.0), (y, 1.0 / 3.0)], 2.0);
        let text = export_mps(&m);
        assert!(text.contains("'INTORG'") && text.contains("'INTEND'"));
        assert!(text.contains(" BV BND"));
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.sense, ObjSense::Maximize);
        assert_eq!(back.vars[0].kind, VarKind::Binary);
        assert_eq!((back.vars[1].lower, back.vars[1].upper), (-1.0, 2.5));
        assert_eq!(back.objective_constant, 2.0);
        assert_eq!(back.evaluate_objective(&[1.0, 0.3]), m.evaluate_objective(&[1.0, 0.3]));
    }
}

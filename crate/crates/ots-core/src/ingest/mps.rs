//! MPS export of `MathProgram`s, plus an independent reader used for
//! round-trip audits and external-solver cross-checks.
//!
//! Sections ROWS/COLUMNS/RHS/RANGES/BOUNDS, binaries wrapped in
//! MARKER INTORG/INTEND. Fields are column-aligned where names permit and
//! always whitespace-delimited. The objective constant rides on the cost
//! row's RHS entry, negated, per the usual convention.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::program::{LinExpr, MathProgram, Sense, VarKind};

const MAX_NAME: usize = 64;

fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if s.is_empty() {
        s.push('_');
    }
    s
}

/// Build unique export names; collisions after sanitization are an error.
fn unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<Vec<String>> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for n in names {
        let s = sanitize(n);
        if s.len() > MAX_NAME {
            return Err(Error::NameCollision { name: s });
        }
        if seen.contains_key(&s) {
            return Err(Error::NameCollision { name: s });
        }
        seen.insert(s.clone(), out.len());
        out.push(s);
    }
    Ok(out)
}

fn num(v: f64) -> String {
    // Full-precision shortest representation round-trips f64 exactly.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

pub fn export_program(prog: &MathProgram) -> Result<String> {
    let col_names = unique_names(prog.vars().iter().map(|v| v.name.as_str()))?;
    let row_names = unique_names(prog.rows().iter().map(|r| r.name.as_str()))?;

    let mut out = String::new();
    out.push_str(&format!("NAME          {}\n", sanitize(&prog.name)));
    out.push_str("ROWS\n");
    out.push_str(" N  COST\n");
    for (r, row) in prog.rows().iter().enumerate() {
        let tag = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        out.push_str(&format!(" {}  {}\n", tag, row_names[r]));
    }

    // Column-major coefficients.
    let mut col_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); prog.n_vars()];
    for (r, row) in prog.rows().iter().enumerate() {
        for &(j, v) in &row.terms {
            col_entries[j].push((r, v));
        }
    }
    let mut obj = vec![0.0f64; prog.n_vars()];
    for &(j, c) in prog.objective() {
        obj[j] += c;
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker_count = 0;
    for (j, var) in prog.vars().iter().enumerate() {
        let want_int = var.kind == VarKind::Binary;
        if want_int != in_int {
            let kind = if want_int { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!(
                "    MARKER{marker_count}                 'MARKER'                 {kind}\n"
            ));
            marker_count += 1;
            in_int = want_int;
        }
        let mut wrote = false;
        if obj[j] != 0.0 {
            out.push_str(&format!("    {}  COST  {}\n", col_names[j], num(obj[j])));
            wrote = true;
        }
        for &(r, v) in &col_entries[j] {
            out.push_str(&format!("    {}  {}  {}\n", col_names[j], row_names[r], num(v)));
            wrote = true;
        }
        if !wrote {
            // Columns must appear at least once to exist.
            out.push_str(&format!("    {}  COST  0.0\n", col_names[j]));
        }
    }
    if in_int {
        out.push_str(&format!(
            "    MARKER{marker_count}                 'MARKER'                 'INTEND'\n"
        ));
    }

    out.push_str("RHS\n");
    if prog.obj_constant != 0.0 {
        out.push_str(&format!("    RHS  COST  {}\n", num(-prog.obj_constant)));
    }
    for (r, row) in prog.rows().iter().enumerate() {
        if row.rhs != 0.0 {
            out.push_str(&format!("    RHS  {}  {}\n", row_names[r], num(row.rhs)));
        }
    }

    out.push_str("RANGES\n");
    out.push_str("BOUNDS\n");
    for (j, var) in prog.vars().iter().enumerate() {
        let (lb, ub) = (var.lb, var.ub);
        let name = &col_names[j];
        if lb == ub {
            out.push_str(&format!(" FX BND  {}  {}\n", name, num(lb)));
        } else if lb.is_infinite() && ub.is_infinite() {
            out.push_str(&format!(" FR BND  {}\n", name));
        } else {
            if lb.is_infinite() {
                out.push_str(&format!(" MI BND  {}\n", name));
            } else if lb != 0.0 {
                out.push_str(&format!(" LO BND  {}  {}\n", name, num(lb)));
            }
            if ub.is_finite() {
                out.push_str(&format!(" UP BND  {}  {}\n", name, num(ub)));
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

/// Parse MPS text back into a program. Written against the format, not the
/// writer: whitespace-delimited fields, classic section keywords.
pub fn parse_mps(text: &str) -> Result<MathProgram> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
        Done,
    }
    let mut prog = MathProgram::new("mps");
    let mut section = Section::None;
    let mut row_sense: BTreeMap<String, Sense> = BTreeMap::new();
    let mut row_order: Vec<String> = Vec::new();
    let mut cost_row = String::new();
    let mut cols: BTreeMap<String, (usize, bool)> = BTreeMap::new(); // name -> (index, integer)
    let mut col_order: Vec<String> = Vec::new();
    let mut col_entries: Vec<Vec<(String, f64)>> = Vec::new();
    let mut col_obj: Vec<f64> = Vec::new();
    let mut rhs: BTreeMap<String, f64> = BTreeMap::new();
    let mut obj_constant = 0.0f64;
    let mut bounds: BTreeMap<String, (f64, f64, bool)> = BTreeMap::new(); // explicit (lb, ub, saw_any)
    let mut integer_mode = false;

    let bad = |line: &str, msg: &str| Error::Schema {
        path: line.trim().to_string(),
        message: format!("mps: {msg}"),
    };

    for raw in text.lines() {
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let head = !raw.starts_with(' ') && !raw.starts_with('\t');
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if head {
            section = match fields[0] {
                "NAME" => {
                    if fields.len() > 1 {
                        prog.name = fields[1].to_string();
                    }
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(bad(raw, &format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(bad(raw, "ROWS entries have two fields"));
                }
                match fields[0] {
                    "N" => cost_row = fields[1].to_string(),
                    "L" => {
                        row_sense.insert(fields[1].to_string(), Sense::Le);
                        row_order.push(fields[1].to_string());
                    }
                    "G" => {
                        row_sense.insert(fields[1].to_string(), Sense::Ge);
                        row_order.push(fields[1].to_string());
                    }
                    "E" => {
                        row_sense.insert(fields[1].to_string(), Sense::Eq);
                        row_order.push(fields[1].to_string());
                    }
                    other => return Err(bad(raw, &format!("unknown row type `{other}`"))),
                }
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    match fields[2] {
                        "'INTORG'" => integer_mode = true,
                        "'INTEND'" => integer_mode = false,
                        other => return Err(bad(raw, &format!("unknown marker `{other}`"))),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(bad(raw, "COLUMNS entries have 3 or 5 fields"));
                }
                let cname = fields[0].to_string();
                let idx = *cols
                    .entry(cname.clone())
                    .or_insert_with(|| {
                        col_order.push(cname.clone());
                        col_entries.push(Vec::new());
                        col_obj.push(0.0);
                        (col_order.len() - 1, integer_mode)
                    });
                let pairs = fields[1..].chunks(2);
                for pair in pairs {
                    let rname = pair[0];
                    let v: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(raw, "bad numeric field"))?;
                    if rname == cost_row {
                        col_obj[idx.0] += v;
                    } else {
                        col_entries[idx.0].push((rname.to_string(), v));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(bad(raw, "RHS entries have 3 or 5 fields"));
                }
                for pair in fields[1..].chunks(2) {
                    let v: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(raw, "bad numeric field"))?;
                    if pair[0] == cost_row {
                        obj_constant = -v;
                    } else {
                        rhs.insert(pair[0].to_string(), v);
                    }
                }
            }
            Section::Ranges => {
                return Err(bad(raw, "RANGES entries are not produced by this tool"));
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(bad(raw, "BOUNDS entries have at least 3 fields"));
                }
                let kind = fields[0];
                let cname = fields[2].to_string();
                let entry = bounds.entry(cname).or_insert((0.0, f64::INFINITY, false));
                entry.2 = true;
                match kind {
                    "UP" => entry.1 = fields[3].parse().map_err(|_| bad(raw, "bad bound"))?,
                    "LO" => entry.0 = fields[3].parse().map_err(|_| bad(raw, "bad bound"))?,
                    "FX" => {
                        let v: f64 = fields[3].parse().map_err(|_| bad(raw, "bad bound"))?;
                        entry.0 = v;
                        entry.1 = v;
                    }
                    "MI" => entry.0 = -f64::INFINITY,
                    "PL" => entry.1 = f64::INFINITY,
                    "FR" => {
                        entry.0 = -f64::INFINITY;
                        entry.1 = f64::INFINITY;
                    }
                    "BV" => {
                        entry.0 = 0.0;
                        entry.1 = 1.0;
                    }
                    other => return Err(bad(raw, &format!("unknown bound type `{other}`"))),
                }
            }
            Section::None | Section::Done => {
                return Err(bad(raw, "data outside any section"));
            }
        }
    }

    // Assemble: continuous block then a `z` block for integers so the
    // program invariant (binaries only in z) holds.
    let mut index_of: BTreeMap<String, usize> = BTreeMap::new();
    let cont: Vec<&String> = col_order.iter().filter(|n| !cols[*n].1).collect();
    let ints: Vec<&String> = col_order.iter().filter(|n| cols[*n].1).collect();
    let mut vars = Vec::new();
    for name in &cont {
        let (lb, ub, _) = bounds.get(*name).copied().unwrap_or((0.0, f64::INFINITY, false));
        vars.push(crate::program::Variable {
            name: (*name).clone(),
            lb,
            ub,
            kind: VarKind::Continuous,
        });
        index_of.insert((*name).clone(), vars.len() - 1);
    }
    let ncont = vars.len();
    let vars_cont = vars;
    let x = prog.add_named_block("x", vars_cont);
    debug_assert_eq!(x.start, 0);
    let _ = x;
    if !ints.is_empty() {
        let mut zvars = Vec::new();
        for name in &ints {
            let (lb, ub, saw) = bounds.get(*name).copied().unwrap_or((0.0, 1.0, false));
            // Integer columns without explicit bounds default to binary here.
            let (lb, ub) = if saw { (lb, ub) } else { (0.0, 1.0) };
            zvars.push(crate::program::Variable {
                name: (*name).clone(),
                lb,
                ub,
                kind: VarKind::Binary,
            });
            index_of.insert((*name).clone(), ncont + zvars.len() - 1);
        }
        prog.add_named_block("z", zvars);
    }

    let row_index: BTreeMap<&String, usize> =
        row_order.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut row_exprs: Vec<LinExpr> = (0..row_order.len()).map(|_| LinExpr::new()).collect();
    for name in &col_order {
        let idx = index_of[name];
        for (rn, v) in &col_entries[cols[name].0] {
            let r = *row_index
                .get(rn)
                .ok_or_else(|| Error::Schema {
                    path: rn.clone(),
                    message: "mps: column entry references unknown row".to_string(),
                })?;
            row_exprs[r].add(idx, *v);
        }
    }
    for (r, rname) in row_order.iter().enumerate() {
        let rv = rhs.get(rname).copied().unwrap_or(0.0);
        prog.add_row(rname.clone(), std::mem::take(&mut row_exprs[r]), row_sense[rname], rv);
    }
    for (name, &(idx, _)) in &cols {
        let c = col_obj[idx];
        if c != 0.0 {
            prog.set_objective_term(index_of[name], c);
        }
    }
    prog.obj_constant = obj_constant;
    prog.seal();
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{LinExpr, MathProgram, Sense, VarKind};

    #[test]
    fn one_variable_lp_exports() {
        // min x s.t. x >= 1.
        let mut p = MathProgram::new("tiny");
        let x = p.add_block("x", 1, 0.0, f64::INFINITY, VarKind::Continuous);
        p.set_objective_term(x.var(0), 1.0);
        p.add_row("floor", LinExpr::term(x.var(0), 1.0), Sense::Ge, 1.0);
        p.seal();
        let text = export_program(&p).unwrap();
        assert_eq!(text.matches(" G  ").count(), 1);
        assert!(text.contains("ENDATA"));
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.n_vars(), 1);
        assert_eq!(back.n_rows(), 1);
        assert_eq!(back.rows()[0].rhs, 1.0);
    }

    #[test]
    fn empty_constraint_program_is_valid_mps() {
        let mut p = MathProgram::new("norows");
        let x = p.add_block("x", 2, 0.0, 5.0, VarKind::Continuous);
        p.set_objective_term(x.var(0), 2.0);
        p.seal();
        let text = export_program(&p).unwrap();
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.n_rows(), 0);
        assert_eq!(back.n_vars(), 2);
    }

    #[test]
    fn name_collision_detected() {
        let mut p = MathProgram::new("dup");
        p.add_block("a b", 1, 0.0, 1.0, VarKind::Continuous);
        p.add_block("a_b", 1, 0.0, 1.0, VarKind::Continuous);
        p.seal();
        assert!(matches!(
            export_program(&p),
            Err(crate::error::Error::NameCollision { .. })
        ));
    }
}

//! MPS export of the mixed-integer formulation, plus a debug dump of any
//! single LP, through one shared fixed-layout writer.
//!
//! The integer model links each inbound flow `y_u_i` to a binary `b_u_i`
//! via `y_u_i <= M b_u_i` and caps `sum_u b_u_i` at the item's budget,
//! with `M` equal to the total demand over all items and zones. Variable
//! names follow the `x_u_v_i`, `y_u_i`, `b_u_i` scheme; since those names
//! outgrow the historical eight-character fields on realistic sizes, the
//! writer keeps the classic section structure and column alignment but
//! widens the name and value fields. Values are printed with shortest
//! round-trip formatting so re-importing loses no precision.

use crate::lp::LpProblem;
use crate::model::Instance;

const NAME_WIDTH: usize = 14;
const VALUE_WIDTH: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    LessEq,
    Eq,
}

impl RowKind {
    fn tag(self) -> &'static str {
        match self {
            RowKind::LessEq => "L",
            RowKind::Eq => "E",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MpsRow {
    pub name: String,
    pub kind: RowKind,
}

#[derive(Debug, Clone)]
pub(crate) struct MpsColumn {
    pub name: String,
    pub integer: bool,
    /// Objective coefficient, written against the cost row when nonzero.
    pub objective: f64,
    /// (row index, coefficient) pairs.
    pub entries: Vec<(usize, f64)>,
    /// Finite upper bound, when any.
    pub upper: Option<f64>,
    /// Fix the column to zero (used for deactivated pairs in LP dumps).
    pub fixed_zero: bool,
}

/// A linear or mixed-integer model in the shape the writer needs.
#[derive(Debug, Clone)]
pub(crate) struct MpsModel {
    pub name: String,
    pub objective_row: String,
    pub rows: Vec<MpsRow>,
    pub columns: Vec<MpsColumn>,
    /// Nonzero right-hand sides by row index.
    pub rhs: Vec<(usize, f64)>,
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

fn value(v: f64) -> String {
    // Shortest round-trip decimal; integers still get a decimal point so
    // strict readers treat the field as numeric.
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

impl MpsModel {
    pub(crate) fn write(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("NAME          {}\n", self.name));
        out.push_str("ROWS\n");
        out.push_str(&format!(" N  {}\n", self.objective_row));
        for row in &self.rows {
            out.push_str(&format!(" {}  {}\n", row.kind.tag(), row.name));
        }

        out.push_str("COLUMNS\n");
        let mut integer_open = false;
        let mut marker_count = 0usize;
        for col in &self.columns {
            if col.integer != integer_open {
                marker_count += 1;
                let tag = if col.integer { "'INTORG'" } else { "'INTEND'" };
                out.push_str(&format!(
                    "    {}  {}  {}\n",
                    pad(&format!("M{marker_count}"), NAME_WIDTH),
                    pad("'MARKER'", NAME_WIDTH),
                    tag
                ));
                integer_open = col.integer;
            }
            let mut pairs: Vec<(&str, f64)> = Vec::new();
            if col.objective != 0.0 {
                pairs.push((self.objective_row.as_str(), col.objective));
            }
            for &(row, coeff) in &col.entries {
                pairs.push((self.rows[row].name.as_str(), coeff));
            }
            for pair in pairs.chunks(2) {
                let mut line = format!(
                    "    {}  {}  {}",
                    pad(&col.name, NAME_WIDTH),
                    pad(pair[0].0, NAME_WIDTH),
                    pad(&value(pair[0].1), VALUE_WIDTH)
                );
                if let Some(second) = pair.get(1) {
                    line.push_str(&format!(
                        "  {}  {}",
                        pad(second.0, NAME_WIDTH),
                        pad(&value(second.1), VALUE_WIDTH)
                    ));
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
        }
        if integer_open {
            marker_count += 1;
            out.push_str(&format!(
                "    {}  {}  'INTEND'\n",
                pad(&format!("M{marker_count}"), NAME_WIDTH),
                pad("'MARKER'", NAME_WIDTH)
            ));
        }

        out.push_str("RHS\n");
        for &(row, rhs) in &self.rhs {
            if rhs != 0.0 {
                let line = format!(
                    "    {}  {}  {}",
                    pad("RHS", NAME_WIDTH),
                    pad(&self.rows[row].name, NAME_WIDTH),
                    pad(&value(rhs), VALUE_WIDTH)
                );
                out.push_str(line.trim_end());
                out.push('\n');
            }
        }

        out.push_str("BOUNDS\n");
        for col in &self.columns {
            if col.fixed_zero {
                let line = format!(
                    " FX {}  {}  {}",
                    pad("BND", NAME_WIDTH - 3),
                    pad(&col.name, NAME_WIDTH),
                    pad(&value(0.0), VALUE_WIDTH)
                );
                out.push_str(line.trim_end());
                out.push('\n');
            } else if let Some(upper) = col.upper {
                let line = format!(
                    " UP {}  {}  {}",
                    pad("BND", NAME_WIDTH - 3),
                    pad(&col.name, NAME_WIDTH),
                    pad(&value(upper), VALUE_WIDTH)
                );
                out.push_str(line.trim_end());
                out.push('\n');
            }
        }
        out.push_str("ENDATA\n");
        out
    }
}

/// The mixed-integer export: the MPS text plus the naming and constants an
/// external run needs to interpret it.
#[derive(Debug, Clone)]
pub struct MipExport {
    pub big_m: f64,
    pub text: String,
    pub binary_names: Vec<String>,
    /// Conservation and capacity row names, in file order.
    pub flow_rows: Vec<String>,
    pub link_rows: Vec<String>,
    pub cardinality_rows: Vec<String>,
}

/// Builds the mixed-integer model of an instance in MPS form.
///
/// Row order: inbound conservation, outbound conservation, capacity, the
/// big-M link rows, then the per-item cardinality rows.
pub fn export_mip(inst: &Instance) -> MipExport {
    let (nu, nv, ni) = (inst.num_centers(), inst.num_zones(), inst.num_items());
    let big_m = inst.total_demand();

    let mut rows = Vec::new();
    let row_in = |u: usize, i: usize| u * ni + i;
    for u in 0..nu {
        for i in 0..ni {
            rows.push(MpsRow {
                name: format!("INB_{u}_{i}"),
                kind: RowKind::Eq,
            });
        }
    }
    let row_out = |v: usize, i: usize| nu * ni + v * ni + i;
    for v in 0..nv {
        for i in 0..ni {
            rows.push(MpsRow {
                name: format!("OUT_{v}_{i}"),
                kind: RowKind::Eq,
            });
        }
    }
    let row_cap = |u: usize| nu * ni + nv * ni + u;
    for u in 0..nu {
        rows.push(MpsRow {
            name: format!("CAP_{u}"),
            kind: RowKind::LessEq,
        });
    }
    let row_link = |u: usize, i: usize| nu * ni + nv * ni + nu + u * ni + i;
    for u in 0..nu {
        for i in 0..ni {
            rows.push(MpsRow {
                name: format!("LNK_{u}_{i}"),
                kind: RowKind::LessEq,
            });
        }
    }
    let row_card = |i: usize| nu * ni + nv * ni + nu + nu * ni + i;
    for i in 0..ni {
        rows.push(MpsRow {
            name: format!("CRD_{i}"),
            kind: RowKind::LessEq,
        });
    }

    let mut columns = Vec::new();
    for u in 0..nu {
        for v in 0..nv {
            for i in 0..ni {
                columns.push(MpsColumn {
                    name: format!("x_{u}_{v}_{i}"),
                    integer: false,
                    objective: inst.cost(u, v),
                    entries: vec![(row_in(u, i), -1.0), (row_out(v, i), 1.0)],
                    upper: None,
                    fixed_zero: false,
                });
            }
        }
    }
    for u in 0..nu {
        for i in 0..ni {
            columns.push(MpsColumn {
                name: format!("y_{u}_{i}"),
                integer: false,
                objective: 0.0,
                entries: vec![(row_in(u, i), 1.0), (row_cap(u), 1.0), (row_link(u, i), 1.0)],
                upper: None,
                fixed_zero: false,
            });
        }
    }
    let mut binary_names = Vec::new();
    for u in 0..nu {
        for i in 0..ni {
            let name = format!("b_{u}_{i}");
            binary_names.push(name.clone());
            columns.push(MpsColumn {
                name,
                integer: true,
                objective: 0.0,
                entries: vec![(row_link(u, i), -big_m), (row_card(i), 1.0)],
                upper: Some(1.0),
                fixed_zero: false,
            });
        }
    }

    let mut rhs = Vec::new();
    for v in 0..nv {
        for i in 0..ni {
            rhs.push((row_out(v, i), inst.demand(v, i)));
        }
    }
    for u in 0..nu {
        rhs.push((row_cap(u), inst.capacity(u)));
    }
    for i in 0..ni {
        rhs.push((row_card(i), inst.sparsity(i) as f64));
    }

    let model = MpsModel {
        name: "SPARSEMIP".to_string(),
        objective_row: "COST".to_string(),
        rows,
        columns,
        rhs,
    };

    let flow_rows = model
        .rows
        .iter()
        .filter(|row| !row.name.starts_with("LNK_") && !row.name.starts_with("CRD_"))
        .map(|row| row.name.clone())
        .collect();
    MipExport {
        big_m,
        text: model.write(),
        binary_names,
        flow_rows,
        link_rows: (0..nu)
            .flat_map(|u| (0..ni).map(move |i| format!("LNK_{u}_{i}")))
            .collect(),
        cardinality_rows: (0..ni).map(|i| format!("CRD_{i}")).collect(),
    }
}

/// Dumps one deactivation-pattern LP (no integer variables; fixed pairs
/// appear as `FX` bounds at zero).
pub fn export_lp(problem: &LpProblem<'_>) -> String {
    let inst = problem.instance();
    let pattern = problem.pattern();
    let (nu, nv, ni) = (inst.num_centers(), inst.num_zones(), inst.num_items());

    let mut rows = Vec::new();
    let row_in = |u: usize, i: usize| u * ni + i;
    for u in 0..nu {
        for i in 0..ni {
            rows.push(MpsRow {
                name: format!("INB_{u}_{i}"),
                kind: RowKind::Eq,
            });
        }
    }
    let row_out = |v: usize, i: usize| nu * ni + v * ni + i;
    for v in 0..nv {
        for i in 0..ni {
            rows.push(MpsRow {
                name: format!("OUT_{v}_{i}"),
                kind: RowKind::Eq,
            });
        }
    }
    let row_cap = |u: usize| nu * ni + nv * ni + u;
    for u in 0..nu {
        rows.push(MpsRow {
            name: format!("CAP_{u}"),
            kind: RowKind::LessEq,
        });
    }

    let mut columns = Vec::new();
    for u in 0..nu {
        for v in 0..nv {
            for i in 0..ni {
                columns.push(MpsColumn {
                    name: format!("x_{u}_{v}_{i}"),
                    integer: false,
                    objective: inst.cost(u, v),
                    entries: vec![(row_in(u, i), -1.0), (row_out(v, i), 1.0)],
                    upper: None,
                    fixed_zero: pattern.is_inactive(u, i),
                });
            }
        }
    }
    for u in 0..nu {
        for i in 0..ni {
            columns.push(MpsColumn {
                name: format!("y_{u}_{i}"),
                integer: false,
                objective: 0.0,
                entries: vec![(row_in(u, i), 1.0), (row_cap(u), 1.0)],
                upper: None,
                fixed_zero: pattern.is_inactive(u, i),
            });
        }
    }

    let mut rhs = Vec::new();
    for v in 0..nv {
        for i in 0..ni {
            rhs.push((row_out(v, i), inst.demand(v, i)));
        }
    }
    for u in 0..nu {
        rhs.push((row_cap(u), inst.capacity(u)));
    }

    MpsModel {
        name: "SPARSELP".to_string(),
        objective_row: "COST".to_string(),
        rows,
        columns,
        rhs,
    }
    .write()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::build_lp;
    use crate::model::SparsePattern;

    fn tiny_instance() -> Instance {
        Instance::new(
            2,
            2,
            1,
            vec![1.0, 2.0, 3.0, 1.0],
            vec![20.0, 20.0],
            vec![5.0, 5.0],
            vec![1],
        )
        .unwrap()
    }

    #[test]
    fn tiny_mip_export_shape() {
        let inst = tiny_instance();
        let export = export_mip(&inst);
        assert_eq!(export.big_m, 10.0);
        assert_eq!(export.binary_names.len(), 2);
        assert_eq!(export.link_rows.len(), 2);
        // 2 inbound + 2 outbound conservation rows plus 2 capacity rows.
        assert_eq!(export.flow_rows.len(), 6);
        assert_eq!(export.cardinality_rows, vec!["CRD_0"]);

        let text = &export.text;
        // 4 x columns, 2 y columns, 2 binaries.
        for name in ["x_0_0_0", "x_0_1_0", "x_1_0_0", "x_1_1_0", "y_0_0", "y_1_0", "b_0_0", "b_1_0"] {
            assert!(text.contains(name), "missing column {name}");
        }
        assert!(text.contains("'INTORG'"));
        assert!(text.contains("'INTEND'"));
        assert!(text.contains("ENDATA"));
        // Link rows carry the negated big-M coefficient.
        assert!(text.contains("-10.0"));
        // Cardinality right-hand side is the budget.
        assert!(text.lines().any(|l| l.contains("CRD_0") && l.contains("1.0")));
    }

    #[test]
    fn zero_demand_gives_zero_big_m() {
        let inst = Instance::new(
            2,
            2,
            1,
            vec![1.0, 2.0, 3.0, 1.0],
            vec![20.0, 20.0],
            vec![0.0, 0.0],
            vec![1],
        )
        .unwrap();
        let export = export_mip(&inst);
        assert_eq!(export.big_m, 0.0);
        // With M = 0 every inbound flow is forced to zero, so the only
        // feasible objective is zero; structurally the link rows lose
        // their binary coefficient.
        assert!(export.text.lines().any(|l| l.contains("b_0_0")));
    }

    #[test]
    fn export_is_deterministic() {
        let inst = tiny_instance();
        assert_eq!(export_mip(&inst).text, export_mip(&inst).text);
    }

    #[test]
    fn lp_dump_marks_fixed_pairs() {
        let inst = tiny_instance();
        let pattern = SparsePattern::from_inactive_sets(2, &[vec![1]]).unwrap();
        let problem = build_lp(&inst, pattern).unwrap();
        let text = export_lp(&problem);
        assert!(text.lines().any(|l| l.starts_with(" FX") && l.contains("y_1_0")));
        assert!(text.lines().any(|l| l.starts_with(" FX") && l.contains("x_1_0_0")));
        assert!(!text.lines().any(|l| l.starts_with(" FX") && l.contains("y_0_0")));
        assert!(!text.contains("'INTORG'"));
    }

    #[test]
    fn sections_appear_in_order() {
        let inst = tiny_instance();
        let text = export_mip(&inst).text;
        let pos = |needle: &str| text.find(needle).unwrap_or_else(|| panic!("missing {needle}"));
        assert!(pos("NAME") < pos("ROWS"));
        assert!(pos("ROWS") < pos("COLUMNS"));
        assert!(pos("COLUMNS") < pos("RHS\n"));
        assert!(pos("RHS\n") < pos("BOUNDS"));
        assert!(pos("BOUNDS") < pos("ENDATA"));
    }
}

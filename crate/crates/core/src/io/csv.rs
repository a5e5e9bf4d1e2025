//! CSV writers for slices and simulation traces.

use std::fmt::Write as _;

use crate::dynamics::STATE_NAMES;
use crate::safe_set::Slice;
use crate::sim::Trace;

/// Slice as a matrix: a `#` line listing the pinned coordinates, a header
/// row with the column-axis coordinates, then one row per row-axis value.
pub fn slice_to_csv(slice: &Slice) -> String {
    let [xn, yn] = slice.axis_names();
    let mut out = String::from("#");
    for (i, (d, v)) in slice.fixed.iter().enumerate() {
        let sep = if i == 0 { " " } else { ", " };
        let _ = write!(out, "{sep}{}={v}", STATE_NAMES[*d]);
    }
    out.push('\n');
    let _ = write!(out, "{yn}\\{xn}");
    for x in &slice.x_axis {
        let _ = write!(out, ",{x}");
    }
    out.push('\n');
    for (y, row) in slice.y_axis.iter().zip(&slice.values) {
        let _ = write!(out, "{y}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per sample. Planar traces leave the follower columns empty, and
/// the final row has no inputs.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from("t,x_g1,v_g1,x_g2,v_g2,u1,u2,u3,value,margin,violation\n");
    for s in &trace.samples {
        let z = s.state.to_array();
        let (x2, v2) = if trace.dim == 4 { (z[2].to_string(), z[3].to_string()) } else { (String::new(), String::new()) };
        let (u1, u2, u3) = match s.inputs {
            Some(i) => (i.u1.to_string(), i.u2.to_string(), if trace.dim == 4 { i.u3.to_string() } else { String::new() }),
            None => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{x2},{v2},{u1},{u2},{u3},{},{},{}",
            s.t,
            z[0],
            z[1],
            opt(s.value),
            s.margin,
            u8::from(s.violated)
        );
    }
    out
}

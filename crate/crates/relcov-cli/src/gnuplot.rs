//! Ready-to-run gnuplot scripts for the emitted CSVs.
//!
//! The tool emits data only; these scripts are a convenience so the
//! standard figures render with `gnuplot plot.gp` in the output
//! directory, without hand-writing `using` clauses against the column
//! layouts.

use relcov::dimensioning::SweepTable;

fn header(title: &str) -> String {
    format!(
        "set datafile separator \",\"\n\
         set terminal pngcairo size 900,700\n\
         set output \"plot.png\"\n\
         set title \"{title}\"\n"
    )
}

/// Coverage vs bandwidth, one curve per (density, reliability target).
pub fn sweep_script(table: &SweepTable) -> String {
    let mut pairs: Vec<(usize, f64)> = table
        .cells
        .iter()
        .map(|c| (c.n_aps, c.alpha_star))
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();

    let mut s = header("coverage vs bandwidth");
    s.push_str("set logscale x\nset xlabel \"bandwidth (Hz)\"\nset ylabel \"covered fraction\"\nset key bottom right\nset yrange [0:1.05]\n");
    let series: Vec<String> = pairs
        .iter()
        .map(|(n, a)| {
            format!(
                "\"sweep.csv\" skip 1 using 1:($2=={n} && $3=={a} ? $4 : 1/0) \
                 with linespoints title \"n={n}, target={a}\""
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    s
}

/// Bandwidth demand vs density.
pub fn dimension_script() -> String {
    let mut s = header("bandwidth demand vs density");
    s.push_str(
        "set logscale y\nset xlabel \"access points\"\nset ylabel \"bandwidth (Hz)\"\n\
         plot \"density_demand.csv\" skip 1 using 1:2 with linespoints notitle\n",
    );
    s
}

/// Heat map over the area; `value_col` is 1-based.
fn map_script(title: &str, file: &str, value_col: usize, label: &str) -> String {
    let mut s = header(title);
    s.push_str(&format!(
        "set xlabel \"x (m)\"\nset ylabel \"y (m)\"\nset cblabel \"{label}\"\n\
         set size ratio -1\n\
         plot \"{file}\" skip 1 using 1:2:{value_col} with image notitle\n"
    ));
    s
}

pub fn relmap_script() -> String {
    map_script("log10 outage", "relmap.csv", 6, "log10(1 - reliability)")
}

pub fn evtmap_script() -> String {
    map_script("log10 outage", "outage_map.csv", 4, "log10 outage")
}

pub fn allocate_script() -> String {
    map_script("sustainable rate", "rate_map.csv", 3, "rate (bit/s)")
}

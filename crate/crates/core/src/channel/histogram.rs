use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;

use super::{CellGrid, Level, Page, Voltage};

/// Cell population of a grid histogram. The three are disjoint: `S1`
/// excludes identified cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Population {
    S0,
    S1,
    S1Identified,
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Population::S0 => "S0",
            Population::S1 => "S1",
            Population::S1Identified => "S1-identified",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub population: String,
    pub bin_center: f64,
    pub count: u64,
}

/// Fixed-width bins aligned at zero: bin `i` covers `[i·w, (i+1)·w)`.
/// Returns `(bin_center, count)` for non-empty bins in increasing order.
///
/// # Panics
/// If `bin_width` is not positive.
pub fn histogram<I>(values: I, bin_width: f64) -> Vec<(f64, u64)>
where
    I: IntoIterator<Item = f64>,
{
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
    for v in values {
        if v.is_finite() {
            *bins.entry((v / bin_width).floor() as i64).or_default() += 1;
        }
    }
    bins.into_iter().map(|(i, c)| ((i as f64 + 0.5) * bin_width, c)).collect()
}

/// Voltage histogram of every written page, split into S0, S1 and the
/// identified S1 cells listed in `identified`.
pub fn grid_histogram<V: Voltage>(
    grid: &CellGrid<V>,
    identified: &[(Page, Vec<usize>)],
    bin_width: f64,
) -> Vec<HistogramRow> {
    let marked: HashSet<(Page, usize)> =
        identified.iter().flat_map(|(p, cells)| cells.iter().map(move |&j| (*p, j))).collect();
    let dims = grid.dims();
    let mut split: BTreeMap<Population, Vec<f64>> = BTreeMap::new();
    for ssl in 0..dims.ssl {
        for wl in 0..dims.wl {
            let page = Page::new(wl, ssl);
            if !grid.is_written(page) {
                continue;
            }
            for (j, (&v, &level)) in grid.voltages(page).iter().zip(grid.intended(page)).enumerate() {
                let pop = match level {
                    Level::S0 => Population::S0,
                    Level::S1 if marked.contains(&(page, j)) => Population::S1Identified,
                    Level::S1 => Population::S1,
                };
                split.entry(pop).or_default().push(v.as_f64());
            }
        }
    }
    split
        .into_iter()
        .flat_map(|(pop, values)| {
            histogram(values, bin_width).into_iter().map(move |(bin_center, count)| HistogramRow {
                population: pop.to_string(),
                bin_center,
                count,
            })
        })
        .collect()
}

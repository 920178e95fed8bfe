//! The two builtin benchmark problems.

use crate::costs::{CostModel, Objective};
use crate::model::PomdpModel;

pub const CLOUD_HORIZON: usize = 10;
pub const NAVIGATION_HORIZON: usize = 10;

/// Three-state regulator with a fixed privacy filter. The operator wants the
/// system in state 3 at the final time.
pub fn build_cloud_model() -> (PomdpModel, CostModel) {
    let a1 = vec![vec![0.8, 0.8, 0.1], vec![0.1, 0.1, 0.8], vec![0.1, 0.1, 0.1]];
    let a2 = vec![vec![0.1, 0.1, 0.1], vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.8]];
    let a3 = (0..3).map(|i| (0..3).map(|j| if i == j { 0.95 } else { 0.025 }).collect()).collect();
    let emission = vec![vec![0.61, 0.3, 0.09], vec![0.3, 0.4, 0.3], vec![0.09, 0.3, 0.61]];
    let model = PomdpModel::new(
        3,
        vec!["1".into(), "2".into(), "3".into()],
        vec!["1".into(), "2".into(), "3".into()],
        vec![a1, a2, a3],
        vec![emission.clone(), emission.clone(), emission.clone()],
        Some(emission),
        vec![1.0 / 3.0; 3],
        CLOUD_HORIZON,
    )
    .expect("cloud model is valid");
    let cost = CostModel::terminal_only(&model, vec![1.0, 1.0, 0.0], Objective::ActiveObfuscation);
    (model, cost)
}

pub const GRID_COLUMNS: usize = 4;
pub const GRID_ROWS: usize = 3;
pub const WALL_DETECTION: f64 = 0.9;
pub const FALSE_DETECTION: f64 = 0.1;
pub const MOVE_SUCCESS: f64 = 0.8;

/// Navigation control set, in index order.
pub const NAVIGATION_CONTROLS: [&str; 5] = ["left", "right", "up", "down", "stay"];

/// Cells are numbered down each column, then across: `index = col * 3 + row`
/// with row 0 at the top, so the last state is the bottom-right cell.
pub fn grid_index(col: usize, row: usize) -> usize {
    col * GRID_ROWS + row
}

pub fn grid_cell(index: usize) -> (usize, usize) {
    (index / GRID_ROWS, index % GRID_ROWS)
}

/// Walls adjacent to a cell in (left, right, up, down) order.
pub fn walls(index: usize) -> [bool; 4] {
    let (col, row) = grid_cell(index);
    [col == 0, col + 1 == GRID_COLUMNS, row == 0, row + 1 == GRID_ROWS]
}

/// Distribution of the number of detected walls, each direction detected
/// independently.
pub fn wall_count_distribution(walls: [bool; 4]) -> Vec<f64> {
    let mut dist = vec![1.0];
    for present in walls {
        let p = if present { WALL_DETECTION } else { FALSE_DETECTION };
        let mut next = vec![0.0; dist.len() + 1];
        for (c, q) in dist.iter().enumerate() {
            next[c] += q * (1.0 - p);
            next[c + 1] += q * p;
        }
        dist = next;
    }
    dist
}

fn neighbour(index: usize, control: usize) -> usize {
    let (col, row) = grid_cell(index);
    let (c, r) = match control {
        0 if col > 0 => (col - 1, row),
        1 if col + 1 < GRID_COLUMNS => (col + 1, row),
        2 if row > 0 => (col, row - 1),
        3 if row + 1 < GRID_ROWS => (col, row + 1),
        _ => (col, row),
    };
    grid_index(c, r)
}

/// 4x3 grid without obstacles; the agent must finish in the bottom-right cell.
pub fn build_navigation_model() -> (PomdpModel, CostModel) {
    let n = GRID_COLUMNS * GRID_ROWS;
    let transition = (0..NAVIGATION_CONTROLS.len())
        .map(|u| {
            let mut a = vec![vec![0.0; n]; n];
            for j in 0..n {
                let target = neighbour(j, u);
                if u == 4 || target == j {
                    a[j][j] = 1.0;
                } else {
                    a[target][j] += MOVE_SUCCESS;
                    a[j][j] += 1.0 - MOVE_SUCCESS;
                }
            }
            a
        })
        .collect();
    let emission: Vec<Vec<f64>> = (0..n).map(|i| wall_count_distribution(walls(i))).collect();
    let model = PomdpModel::new(
        n,
        NAVIGATION_CONTROLS.iter().map(|s| s.to_string()).collect(),
        (0..5).map(|c| c.to_string()).collect(),
        transition,
        vec![emission.clone(); NAVIGATION_CONTROLS.len()],
        Some(emission),
        vec![1.0 / n as f64; n],
        NAVIGATION_HORIZON,
    )
    .expect("navigation model is valid");
    let mut terminal = vec![1.0; n];
    terminal[n - 1] = 0.0;
    let cost = CostModel::terminal_only(&model, terminal, Objective::ActiveEstimation);
    (model, cost)
}

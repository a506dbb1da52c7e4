//! ASCII drawing of the double Mach–Zehnder preset.

use std::collections::BTreeSet;

type Point = (i32, i32);

/// Arm segments in figure coordinates (x right, y up).
const SEGMENTS: &[(&str, Point, Point)] = &[
    ("a", (0, 1), (1, 1)),
    ("b", (1, 0), (1, 1)),
    ("c", (1, 1), (4, 1)),
    ("c", (4, 1), (4, 4)),
    ("d", (1, 1), (1, 4)),
    ("d", (1, 4), (4, 4)),
    ("e", (4, 4), (7, 4)),
    ("e", (7, 4), (7, 7)),
    ("f", (4, 4), (4, 7)),
    ("f", (4, 7), (7, 7)),
    ("g", (7, 7), (8, 7)),
    ("h", (7, 7), (7, 8)),
];

const BEAMSPLITTERS: &[(&str, Point)] = &[("BS1", (1, 1)), ("BS2", (4, 4)), ("BS3", (7, 7))];
const MIRRORS: &[Point] = &[(4, 1), (1, 4), (7, 4), (4, 7)];

const SX: i32 = 6;
const SY: i32 = 2;
const WIDTH: usize = 58;
const HEIGHT: usize = 19;

fn pos((x, y): Point) -> (usize, usize) {
    ((2 + x * SX) as usize, (1 + (8 - y) * SY) as usize)
}

struct Canvas(Vec<Vec<char>>);

impl Canvas {
    fn put(&mut self, col: usize, row: usize, ch: char) {
        if row < HEIGHT && col < WIDTH {
            self.0[row][col] = ch;
        }
    }

    fn text(&mut self, col: usize, row: usize, s: &str) {
        for (i, ch) in s.chars().enumerate() {
            self.put(col + i, row, ch);
        }
    }
}

/// Draws the preset; arms in `marked` are drawn with `#`.
pub fn render(marked: &BTreeSet<String>) -> String {
    let mut c = Canvas(vec![vec![' '; WIDTH]; HEIGHT]);
    for &(mode, from, to) in SEGMENTS {
        let hot = marked.contains(mode);
        let (c0, r0) = pos(from);
        let (c1, r1) = pos(to);
        if r0 == r1 {
            for col in c0.min(c1)..=c0.max(c1) {
                c.put(col, r0, if hot { '#' } else { '-' });
            }
            c.put((c0 + c1) / 2 + 1, r0 - 1, mode.chars().next().unwrap());
        } else {
            for row in r0.min(r1)..=r0.max(r1) {
                c.put(c0, row, if hot { '#' } else { '|' });
            }
            c.put(c0 + 2, (r0 + r1) / 2, mode.chars().next().unwrap());
        }
    }
    for &m in MIRRORS {
        let (col, row) = pos(m);
        c.put(col, row, '/');
    }
    for &(name, p) in BEAMSPLITTERS {
        let (col, row) = pos(p);
        c.put(col, row, '/');
        c.text(col - 4, row + 1, name);
    }
    let (gc, gr) = pos((8, 7));
    c.text(gc + 1, gr, "[G]");
    let (hc, hr) = pos((7, 8));
    c.text(hc - 1, hr - 1, "[H]");
    let mut out: Vec<String> = c.0.into_iter().map(|r| r.into_iter().collect::<String>().trim_end().to_string()).collect();
    while out.first().is_some_and(|l| l.is_empty()) {
        out.remove(0);
    }
    let mut s = out.join("\n");
    s.push('\n');
    s
}

//! Tiny dot-matrix font for lead labels on rendered sheets.
//!
//! Each glyph is 5 dots wide and 7 tall. Every pattern forms a single
//! 8-connected blob so a rendered character is exactly one component for
//! downstream blob analysis.

pub const GLYPH_COLS: usize = 5;
pub const GLYPH_ROWS: usize = 7;

/// Dot pattern for one character; `#` marks a dot. Covers the characters
/// used in standard limb-lead names plus `lead_N` fallbacks.
pub fn glyph_pattern(c: char) -> Option<[&'static str; GLYPH_ROWS]> {
    let p = match c {
        'I' => ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"],
        'V' => ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."],
        'R' => ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"],
        'L' => ["#....", "#....", "#....", "#....", "#....", "#....", "#####"],
        'F' => ["#####", "#....", "#....", "####.", "#....", "#....", "#...."],
        'a' => [".....", ".....", ".###.", "....#", ".####", "#...#", ".####"],
        'l' => [".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."],
        'e' => [".....", ".....", ".###.", "#...#", "#####", "#....", ".####"],
        'd' => ["....#", "....#", ".####", "#...#", "#...#", "#...#", ".####"],
        'v' => [".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."],
        '_' => [".....", ".....", ".....", ".....", ".....", ".....", "#####"],
        '0' => [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
        '1' => ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
        '2' => [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
        '3' => [".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."],
        '4' => ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
        '5' => ["#####", "#....", "#....", "####.", "....#", "#...#", ".###."],
        '6' => ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
        '7' => ["#####", "....#", "...#.", "..#..", "..#..", "..#..", "..#.."],
        '8' => [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
        '9' => [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
        _ => return None,
    };
    Some(p)
}

/// Dot coordinates (row, col) of a glyph, row-major.
pub fn glyph_dots(c: char) -> Option<Vec<(usize, usize)>> {
    glyph_pattern(c).map(|rows| {
        rows.iter()
            .enumerate()
            .flat_map(|(r, line)| {
                line.bytes()
                    .enumerate()
                    .filter(|&(_, b)| b == b'#')
                    .map(move |(c, _)| (r, c))
            })
            .collect()
    })
}

//! Plain-text graymap images and tables.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const MAXVAL: u32 = 255;

fn check_matrix(m: &[Vec<f64>]) -> Result<usize> {
    let cols = m.first().map_or(0, Vec::len);
    if m.is_empty() || cols == 0 {
        return Err(Error::domain("cannot render an empty matrix"));
    }
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::domain("matrix rows differ in length"));
    }
    if let Some(v) = m.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("value {v} outside [0, 1]")));
    }
    Ok(cols)
}

/// ASCII (`P2`) graymap with one `cell_px x cell_px` block per entry, row `i`
/// of the matrix drawn as the `i`-th block row. 1.0 is white.
pub fn render_pgm(m: &[Vec<f64>], cell_px: usize) -> Result<String> {
    let cols = check_matrix(m)?;
    if cell_px == 0 {
        return Err(Error::config("render.cell_px", "must be at least 1"));
    }
    let (w, h) = (cols * cell_px, m.len() * cell_px);
    let mut out = format!("P2\n{w} {h}\n{MAXVAL}\n");
    for row in m {
        let line: Vec<String> = row
            .iter()
            .flat_map(|v| {
                let g = (v * MAXVAL as f64).round() as u32;
                std::iter::repeat_n(g.to_string(), cell_px)
            })
            .collect();
        let line = line.join(" ");
        for _ in 0..cell_px {
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Parses a graymap written by [`render_pgm`] into `(width, height, pixels)`.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<u32>)> {
    let mut tokens = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(Error::domain("not an ASCII graymap"));
    }
    let mut num = || -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::domain("truncated or malformed graymap"))
    };
    let (w, h, _max) = (num()?, num()?, num()?);
    let pixels = (0..w * h).map(|_| num().map(|p| p as u32)).collect::<Result<_>>()?;
    Ok((w, h, pixels))
}

/// Fixed-width table with the y axis down the side and x across the top.
pub fn heatmap_table(axis: &[f64], m: &[Vec<f64>]) -> Result<String> {
    check_matrix(m)?;
    let mut out = format!("{:>7}", "y\\x");
    for x in axis {
        let _ = write!(out, "{x:>6.1}");
    }
    out.push('\n');
    for (j, y) in axis.iter().enumerate() {
        let _ = write!(out, "{y:>7.1}");
        for row in m {
            let _ = write!(out, "{:>6.2}", row[j]);
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_is_white() {
        let (w, h, px) = parse_pgm(&render_pgm(&vec![vec![1.0; 3]; 2], 4).unwrap()).unwrap();
        assert_eq!((w, h), (12, 8));
        assert!(px.iter().all(|&p| p == MAXVAL));
    }

    #[test]
    fn checkerboard() {
        let (w, h, px) = parse_pgm(&render_pgm(&[vec![0.0, 1.0], vec![1.0, 0.0]], 2).unwrap()).unwrap();
        assert_eq!((w, h), (4, 4));
        let expect = [0, 0, 255, 255, 0, 0, 255, 255, 255, 255, 0, 0, 255, 255, 0, 0];
        assert_eq!(px, expect);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(render_pgm(&[], 1).is_err());
        assert!(render_pgm(&[vec![1.5]], 1).is_err());
        assert!(render_pgm(&[vec![0.5], vec![0.5, 0.5]], 1).is_err());
        assert!(render_pgm(&[vec![0.5]], 0).is_err());
        assert!(parse_pgm("P5\n1 1\n255\n0").is_err());
        assert!(parse_pgm("P2\n2 2\n255\n0 0 0").is_err());
    }
}

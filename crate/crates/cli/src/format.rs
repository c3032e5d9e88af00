//! Number formatting for human-readable output.

#[derive(Debug, Clone, Copy)]
pub struct Fmt {
    pub full: bool,
}

impl Fmt {
    pub fn num(&self, v: f64) -> String {
        if self.full {
            v.to_string()
        } else {
            sig4(v)
        }
    }

    pub fn opt(&self, v: Option<f64>) -> String {
        v.map_or_else(|| "-".to_string(), |v| self.num(v))
    }
}

/// Four significant digits; scientific notation outside `1e-4 .. 1e6`.
pub fn sig4(v: f64) -> String {
    if v == 0.0 {
        return "0.000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // round first so a carry (9.9996 -> 10.00) picks the right magnitude
    let r: f64 = format!("{v:.3e}").parse().unwrap_or(v);
    let mag = r.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (3 - mag).max(0) as usize;
        format!("{r:.decimals$}")
    } else {
        format!("{r:.3e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_digits() {
        assert_eq!(sig4(0.887_123), "0.8871");
        assert_eq!(sig4(0.005_512), "0.005512");
        assert_eq!(sig4(1.0), "1.000");
        assert_eq!(sig4(45.92), "45.92");
        assert_eq!(sig4(-0.463_96), "-0.4640");
        assert_eq!(sig4(12345.6), "12350");
        assert_eq!(sig4(9.9996), "10.00");
        assert_eq!(sig4(0.099_996), "0.1000");
        assert_eq!(sig4(2.5e-7), "2.500e-7");
        assert_eq!(sig4(0.0), "0.000");
    }
}

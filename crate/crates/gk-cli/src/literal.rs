//! Complex literals `a`, `bi`, `a+bi`, `a-bi` with real `a`, `b`.

use gk::GkError;
use num_complex::Complex64;

fn err(pos: usize, msg: &str) -> GkError {
    GkError::Parse { pos, msg: msg.to_string() }
}

/// Scans one signed real number starting at `i`, returning its end; the sign
/// is mandatory unless `leading`.
fn scan_real(b: &[u8], mut i: usize, leading: bool) -> Result<usize, GkError> {
    match b.get(i) {
        Some(b'+') | Some(b'-') => i += 1,
        _ if !leading => return Err(err(i, "expected '+' or '-'")),
        _ => {}
    }
    let start = i;
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') && i > start {
        i += 1;
        if matches!(b.get(i), Some(b'+') | Some(b'-')) {
            i += 1;
        }
        let exp = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp {
            return Err(err(i, "missing exponent digits"));
        }
    }
    Ok(i)
}

fn real_of(s: &str, pos: usize) -> Result<f64, GkError> {
    let t = match s {
        "" | "+" => "1",
        "-" => "-1",
        t => t,
    };
    t.parse::<f64>().map_err(|_| err(pos, "malformed real number"))
}

/// Parses a complex literal; blanks are not allowed.
pub fn parse_complex(s: &str) -> Result<Complex64, GkError> {
    let b = s.as_bytes();
    if b.is_empty() {
        return Err(err(0, "empty complex literal"));
    }
    let end1 = scan_real(b, 0, true)?;
    if end1 == b.len() {
        if !b.iter().any(|x| x.is_ascii_digit()) {
            return Err(err(end1, "expected digits"));
        }
        return Ok(Complex64::new(real_of(s, 0)?, 0.0));
    }
    if b[end1] == b'i' {
        if end1 + 1 != b.len() {
            return Err(err(end1 + 1, "unexpected character after imaginary unit"));
        }
        return Ok(Complex64::new(0.0, real_of(&s[..end1], 0)?));
    }
    if end1 == 0 || !matches!(b[end1], b'+' | b'-') {
        return Err(err(end1, "unexpected character"));
    }
    let re = real_of(&s[..end1], 0)?;
    let end2 = scan_real(b, end1, false)?;
    if b.get(end2) != Some(&b'i') {
        return Err(err(end2, "expected imaginary unit 'i'"));
    }
    if end2 + 1 != b.len() {
        return Err(err(end2 + 1, "unexpected character after imaginary unit"));
    }
    Ok(Complex64::new(re, real_of(&s[end1..end2], end1)?))
}

/// Lossless textual form accepted by [`parse_complex`].
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

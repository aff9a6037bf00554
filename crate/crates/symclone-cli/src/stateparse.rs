//! Parses state vectors given on the command line as comma-separated
//! complex entries: bare reals (`0.5`, `-1e-3`) or `a+bi` forms (`1+2i`,
//! `-0.3i`, `i`).

use symclone::C64;

pub fn parse_state(text: &str) -> Result<Vec<C64>, String> {
    text.split(',').map(|tok| parse_complex(tok.trim())).collect()
}

fn parse_complex(token: &str) -> Result<C64, String> {
    if token.is_empty() {
        return Err("empty entry in state vector".into());
    }
    let Some(body) = token.strip_suffix(['i', 'I']) else {
        return Ok(C64::new(parse_real(token, token)?, 0.0));
    };
    // Split off the imaginary part at the last sign that is not an
    // exponent sign, e.g. "2-1e-5i" -> ("2", "-1e-5").
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&pos| matches!(bytes[pos], b'+' | b'-') && !matches!(bytes[pos - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(pos) => (&body[..pos], &body[pos..]),
        None => ("", body),
    };
    let re = if re_part.is_empty() { 0.0 } else { parse_real(re_part, token)? };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_real(other, token)?,
    };
    Ok(C64::new(re, im))
}

fn parse_real(text: &str, whole: &str) -> Result<f64, String> {
    text.parse::<f64>()
        .map_err(|_| format!("cannot parse {whole:?} as a complex number"))
}

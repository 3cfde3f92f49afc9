use super::{SimParams, TransportError};

pub fn parse(text: &str) -> Result<SimParams, TransportError> {
    let mut params = SimParams::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| TransportError::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim();
        let value: f64 = value.trim().parse().map_err(|_| {
            TransportError::Config(format!("line {}: bad number for {key}", lineno + 1))
        })?;
        match key {
            "latency_us" => params.latency = value * 1e-6,
            "bandwidth_gbps" => params.bandwidth = value * 1e9 / 8.0,
            "compress_cost_ns_per_elem" => params.compress_cost = value * 1e-9,
            "decompress_cost_ns_per_elem" => params.decompress_cost = value * 1e-9,
            "reduce_cost_ns_per_elem" => params.reduce_cost = value * 1e-9,
            "memcpy_cost_ns_per_byte" => params.memcpy_cost = value * 1e-9,
            other => {
                return Err(TransportError::Config(format!(
                    "line {}: unknown key {other}",
                    lineno + 1
                )))
            }
        }
    }
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "\
# fabric
latency_us = 2.0
bandwidth_gbps = 200
compress_cost_ns_per_elem = 4
decompress_cost_ns_per_elem = 2
reduce_cost_ns_per_elem = 0.5
memcpy_cost_ns_per_byte = 0.05
";
        let p = parse(text).unwrap();
        assert_eq!(p.latency, 2e-6);
        assert_eq!(p.bandwidth, 25e9);
        assert_eq!(p.compress_cost, 4e-9);
        assert_eq!(p.decompress_cost, 2e-9);
        assert_eq!(p.reduce_cost, 0.5e-9);
        assert!((p.memcpy_cost - 0.05e-9).abs() < 1e-15 * 0.05e-9);
    }

    #[test]
    fn rejects_unknown_key_and_bad_values() {
        assert!(parse("warp_factor=9").is_err());
        assert!(parse("latency_us=fast").is_err());
        assert!(parse("bandwidth_gbps=0").is_err());
        assert!(parse("latency_us=-1").is_err());
    }
}

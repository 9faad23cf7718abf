//! Grid argument parsing: either a comma list `0.5,1,2` or a range
//! `start:end:step` (inclusive of the end up to rounding).

pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty grid".into());
    }
    if t.contains(':') {
        let parts: Vec<&str> = t.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("bad range {t:?}: expected start:end:step"));
        }
        let start: f64 = parts[0].parse().map_err(|_| format!("bad number {:?}", parts[0]))?;
        let end: f64 = parts[1].parse().map_err(|_| format!("bad number {:?}", parts[1]))?;
        let step: f64 = parts[2].parse().map_err(|_| format!("bad number {:?}", parts[2]))?;
        if step <= 0.0 || end < start {
            return Err(format!("bad range {t:?}: need step > 0 and end >= start"));
        }
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let v = start + step * i as f64;
            if v > end + 1e-12 * step.max(1.0) {
                break;
            }
            out.push(v);
            i += 1;
        }
        Ok(out)
    } else {
        t.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number {p:?}"))
            })
            .collect()
    }
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad integer {p:?}"))
        })
        .collect()
}

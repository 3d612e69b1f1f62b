use super::{BootstrapRun, ExcludedReplicate};
use crate::error::{Error, Result};
use crate::weights::WeightScheme;

impl BootstrapRun {
    /// `# key = value` metadata lines followed by `b,theta1,...,thetad` rows of usable replicates.
    pub fn to_artifact(&self, extra_header: &[(String, String)]) -> String {
        let mut out = String::new();
        let mut meta = |k: &str, v: String| out.push_str(&format!("# {k} = {v}\n"));
        for (k, v) in extra_header {
            meta(k, v.clone());
        }
        meta("scheme", self.scheme.to_string());
        meta("n", self.n.to_string());
        meta("B", self.replicates.to_string());
        meta("c2", self.c2.to_string());
        meta("seed", self.seed.to_string());
        meta("theta_hat", join(&self.theta_hat));
        meta("excluded", self.excluded.len().to_string());
        if !self.excluded.is_empty() {
            let list: Vec<String> = self.excluded.iter().map(|e| format!("{}:{}", e.b, e.reason.replace(';', ","))).collect();
            meta("excluded_replicates", list.join(";"));
        }
        let mut header = String::from("b");
        for j in 1..=self.dimension() {
            header.push_str(&format!(",theta{j}"));
        }
        out.push_str(&header);
        out.push('\n');
        for (b, row) in self.usable.iter().zip(&self.theta_stars) {
            out.push_str(&format!("{b},{}\n", join(row)));
        }
        out
    }

    pub fn from_artifact(text: &str) -> Result<Self> {
        let mut meta = std::collections::BTreeMap::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((i, line)) = lines.peek().copied() {
            let Some(rest) = line.strip_prefix('#') else { break };
            lines.next();
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, message: "expected `# key = value`".into() })?;
            meta.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        let get = |k: &str| {
            meta.get(k)
                .map(|(line, v)| (*line, v.as_str()))
                .ok_or_else(|| Error::Parse { line: 0, message: format!("missing header `{k}`") })
        };
        fn num<T: std::str::FromStr>(entry: (usize, &str)) -> Result<T> {
            entry.1.parse().map_err(|_| Error::Parse { line: entry.0, message: format!("cannot parse `{}`", entry.1) })
        }
        let scheme: WeightScheme = get("scheme")?.1.parse()?;
        let theta_hat = get("theta_hat")?
            .1
            .split(',')
            .map(|v| num((get("theta_hat")?.0, v.trim())))
            .collect::<Result<Vec<f64>>>()?;
        let excluded = match meta.get("excluded_replicates") {
            None => Vec::new(),
            Some((line, list)) => list
                .split(';')
                .map(|item| {
                    let (b, reason) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Parse { line: *line, message: format!("bad exclusion `{item}`") })?;
                    Ok(ExcludedReplicate { b: num((*line, b))?, reason: reason.to_string() })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let d = theta_hat.len();
        let (header_line, header) =
            lines.next().ok_or_else(|| Error::Parse { line: 0, message: "missing column header".into() })?;
        let expected: Vec<String> = std::iter::once("b".to_string()).chain((1..=d).map(|j| format!("theta{j}"))).collect();
        if header.split(',').map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse { line: header_line + 1, message: format!("expected header `{}`", expected.join(",")) });
        }
        let mut usable = Vec::new();
        let mut theta_stars = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 1 {
                return Err(Error::Parse { line: i + 1, message: format!("expected {} fields", d + 1) });
            }
            usable.push(num((i + 1, fields[0]))?);
            theta_stars.push(fields[1..].iter().map(|f| num((i + 1, f))).collect::<Result<Vec<f64>>>()?);
        }
        let run = BootstrapRun {
            scheme,
            c2: num(get("c2")?)?,
            n: num(get("n")?)?,
            replicates: num(get("B")?)?,
            seed: num(get("seed")?)?,
            theta_hat,
            theta_stars,
            usable,
            excluded,
            warnings: Vec::new(),
        };
        let declared: usize = num(get("excluded")?)?;
        if declared != run.excluded.len() || run.usable.len() + declared != run.replicates {
            return Err(Error::Parse { line: 0, message: "replicate counts in the header are inconsistent".into() });
        }
        Ok(run)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Failures that end a run with exit code 1.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<stratbundle::error::Error> for InputError {
    fn from(e: stratbundle::error::Error) -> Self {
        InputError(e.to_string())
    }
}

pub type CliResult<T> = Result<T, InputError>;

/// Parses `path` as JSON, reporting the failing path in the document and
/// its line and column.
pub fn load<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: cannot read {what}: {e}", path.display())))?;
    parse(&text, what).map_err(|e| InputError(format!("{}:{e}", path.display())))
}

/// A file holding one value or a list of them; the first token decides.
pub fn load_many<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<Vec<T>> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: cannot read {what}: {e}", path.display())))?;
    let parsed = if text.trim_start().starts_with('[') {
        parse(&text, what)
    } else {
        parse(&text, what).map(|one| vec![one])
    };
    parsed.map_err(|e| InputError(format!("{}:{e}", path.display())))
}

pub(crate) fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        let message = inner.to_string();
        let suffix = format!(" at line {} column {}", inner.line(), inner.column());
        let message = message.strip_suffix(&suffix).unwrap_or(&message);
        let at = e.path().to_string();
        let at = if at == "." || at == "?" { String::new() } else { format!(" at {at}") };
        format!("{}:{}: invalid {what}{at}: {message}", inner.line(), inner.column())
    })?;
    de.end().map_err(|e| format!("{}:{}: trailing data after {what}", e.line(), e.column()))?;
    Ok(value)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| InputError(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, s).map_err(|e| InputError(format!("{}: cannot write: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use stratbundle::strata::Stratification;

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse::<Stratification>("{\n  \"ambient\": 1,\n  \"strata\": [\n", "stratification").unwrap_err();
        assert!(e.starts_with("4:0:"), "{e}");
    }

    #[test]
    fn schema_errors_carry_path() {
        let text = r#"{"ambient": 1, "strata": [{"name": "a", "dim": "zero", "points": [[0]]}], "closure": []}"#;
        let e = parse::<Stratification>(text, "stratification").unwrap_err();
        assert!(e.contains("strata[0].dim"), "{e}");
    }

    #[test]
    fn lists_and_single_values() {
        let dir = tempfile::tempdir().unwrap();
        let one = dir.path().join("one.json");
        let many = dir.path().join("many.json");
        fs::write(&one, "3").unwrap();
        fs::write(&many, " [1, 2]").unwrap();
        assert_eq!(load_many::<u32>(&one, "n").unwrap(), vec![3]);
        assert_eq!(load_many::<u32>(&many, "n").unwrap(), vec![1, 2]);
        fs::write(&many, "[1, \"x\"]").unwrap();
        let e = load_many::<u32>(&many, "n").unwrap_err().0;
        assert!(e.contains("at [1]"), "{e}");
    }
}

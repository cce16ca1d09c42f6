use std::fs;
use std::path::Path;

use fairlens::Error;

/// Writes every file into a staging directory inside `out`, then renames
/// them into place. Nothing is written unless all contents were produced.
pub fn write_all_atomic(out: &Path, files: &[(String, String)]) -> Result<(), Error> {
    let io = |path: &Path, e| Error::Io { path: path.to_path_buf(), source: e };
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let staging = tempfile::Builder::new().prefix(".fairlens-staging").tempdir_in(out).map_err(|e| io(out, e))?;
    for (name, contents) in files {
        let p = staging.path().join(name);
        fs::write(&p, contents).map_err(|e| io(&p, e))?;
    }
    for (name, _) in files {
        let from = staging.path().join(name);
        let to = out.join(name);
        fs::rename(&from, &to).map_err(|e| io(&to, e))?;
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};

use super::{holds, is_lattice, AlgebraError, FiniteAlgebra};
use crate::exec::Execution;
use crate::term::{parse_equation, Equation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Search,
    Hand,
}

impl Provenance {
    fn as_str(self) -> &'static str {
        match self {
            Provenance::Search => "search",
            Provenance::Hand => "hand",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LibraryEntry {
    pub algebra: FiniteAlgebra,
    pub provenance: Provenance,
    /// The candidate whose search produced this model.
    pub trigger: Option<Equation>,
    /// Backing file, once the entry has been loaded from or written to disk.
    pub file: Option<PathBuf>,
}

impl LibraryEntry {
    pub fn found(algebra: FiniteAlgebra, trigger: Equation) -> Self {
        LibraryEntry {
            algebra,
            provenance: Provenance::Search,
            trigger: Some(trigger),
            file: None,
        }
    }

    pub fn hand(algebra: FiniteAlgebra) -> Self {
        LibraryEntry {
            algebra,
            provenance: Provenance::Hand,
            trigger: None,
            file: None,
        }
    }

    pub fn to_model_text(&self) -> String {
        let mut comments = vec![format!("provenance: {}", self.provenance.as_str())];
        if let Some(t) = &self.trigger {
            comments.push(format!("candidate: {t}"));
        }
        self.algebra.to_model_text(&comments)
    }

    pub fn from_model_text(text: &str) -> Result<Self, AlgebraError> {
        let (algebra, comments) = FiniteAlgebra::parse_model_text(text)?;
        let mut entry = LibraryEntry::hand(algebra);
        for c in comments {
            if let Some(p) = c.strip_prefix("provenance:") {
                if p.trim() == "search" {
                    entry.provenance = Provenance::Search;
                }
            } else if let Some(eq) = c.strip_prefix("candidate:") {
                let parsed = parse_equation(eq.trim()).map_err(|e| AlgebraError::Format {
                    line: 0,
                    message: format!("bad candidate comment: {e}"),
                })?;
                entry.trigger = Some(parsed);
            }
        }
        Ok(entry)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}")]
    Format {
        path: PathBuf,
        #[source]
        source: AlgebraError,
    },
    #[error("{0}: model is a lattice; the library holds nonlattices only")]
    IsLattice(String),
}

/// Ordered collection of nonlattice countermodels.
#[derive(Clone, Debug, Default)]
pub struct ModelLibrary {
    entries: Vec<LibraryEntry>,
}

impl ModelLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: LibraryEntry) -> Result<(), LibraryError> {
        if is_lattice(&entry.algebra) {
            let name = entry
                .file
                .as_ref()
                .map_or_else(|| format!("{:?}", entry.algebra), |p| p.display().to_string());
            return Err(LibraryError::IsLattice(name));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn contains_iso(&self, alg: &FiniteAlgebra) -> bool {
        let canon = alg.iso_canonical();
        self.entries
            .iter()
            .any(|e| e.algebra.size() == alg.size() && e.algebra.iso_canonical() == canon)
    }

    /// Index of the first model in which `e` holds.
    pub fn first_model_of(&self, e: &Equation) -> Option<usize> {
        self.entries.iter().position(|m| holds(&m.algebra, e))
    }

    /// Loads every `*.model` file in `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Self, LibraryError> {
        let io = |source| LibraryError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "model"))
            .collect();
        paths.sort();
        let mut lib = ModelLibrary::new();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|source| LibraryError::Io {
                path: path.clone(),
                source,
            })?;
            let mut entry = LibraryEntry::from_model_text(&text).map_err(|source| LibraryError::Format {
                path: path.clone(),
                source,
            })?;
            entry.file = Some(path);
            lib.push(entry)?;
        }
        Ok(lib)
    }

    /// Writes every entry without a backing file into `dir` as `mNNNNNN.model`.
    /// Returns the number of files written.
    pub fn save_new(&mut self, dir: &Path) -> Result<usize, LibraryError> {
        let mut next = 0usize;
        let mut written = 0;
        for i in 0..self.entries.len() {
            if self.entries[i].file.is_some() {
                continue;
            }
            let path = loop {
                let p = dir.join(format!("m{next:06}.model"));
                next += 1;
                if !p.exists() {
                    break p;
                }
            };
            fs::write(&path, self.entries[i].to_model_text()).map_err(|source| LibraryError::Io {
                path: path.clone(),
                source,
            })?;
            self.entries[i].file = Some(path);
            written += 1;
        }
        Ok(written)
    }
}

/// Passes through the equations that hold in none of the library's models, in order.
pub fn model_filter<'a, I>(candidates: I, lib: &'a ModelLibrary) -> impl Iterator<Item = Equation> + 'a
where
    I: IntoIterator<Item = Equation>,
    I::IntoIter: 'a,
{
    candidates.into_iter().filter(move |e| lib.first_model_of(e).is_none())
}

/// Batch form of [`model_filter`].
pub fn filter_models(candidates: &[Equation], lib: &ModelLibrary, exec: Execution) -> Vec<Equation> {
    exec.filter(candidates, |e| lib.first_model_of(e).is_none())
}

//! Labeled image datasets with deterministic iteration order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// An ordered list of `(image, label)` pairs over a fixed label alphabet.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    items: Vec<(Image, usize)>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Domain("num_classes must be positive".into()));
        }
        Ok(LabeledDataset {
            items: Vec::new(),
            num_classes,
        })
    }

    pub fn push(&mut self, image: Image, label: usize) -> Result<()> {
        if label >= self.num_classes {
            return Err(Error::Index(format!(
                "label {label} >= num_classes {}",
                self.num_classes
            )));
        }
        self.items.push((image, label));
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&(Image, usize)> {
        self.items.get(idx)
    }

    /// Items in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &(Image, usize)> {
        self.items.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|(_, l)| *l)
    }

    /// A new dataset containing the items at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let mut out = LabeledDataset::new(self.num_classes)?;
        for &i in indices {
            let (img, l) = self
                .items
                .get(i)
                .ok_or_else(|| Error::Index(format!("item {i} of {}", self.items.len())))?;
            out.push(img.clone(), *l)?;
        }
        Ok(out)
    }

    /// First `n` items of each class, concatenated in class order.
    pub fn take_per_class(&self, n: usize) -> Result<LabeledDataset> {
        let mut out = LabeledDataset::new(self.num_classes)?;
        for class in 0..self.num_classes {
            let mut taken = 0;
            for (img, l) in &self.items {
                if *l == class {
                    out.push(img.clone(), class)?;
                    taken += 1;
                    if taken == n {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Load a dataset from a directory of class subdirectories of PNGs.
    ///
    /// Class subdirectories are sorted by name and assigned labels 0.., files
    /// within a class are sorted by name, so the order is stable.
    pub fn load_dir(root: &Path) -> Result<LabeledDataset> {
        let mut class_dirs: Vec<_> = std::fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .map(|e| e.path())
            .collect();
        class_dirs.sort();
        if class_dirs.is_empty() {
            return Err(Error::Format(format!(
                "{}: no class subdirectories",
                root.display()
            )));
        }
        let mut ds = LabeledDataset::new(class_dirs.len())?;
        for (label, dir) in class_dirs.iter().enumerate() {
            let mut files: Vec<_> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().map(|e| e == "png").unwrap_or(false))
                .collect();
            files.sort();
            for f in files {
                ds.push(Image::load_png(&f)?, label)?;
            }
        }
        Ok(ds)
    }

    /// Write the dataset as class subdirectories of PNGs under `root`.
    pub fn save_dir(&self, root: &Path) -> Result<()> {
        for class in 0..self.num_classes {
            std::fs::create_dir_all(root.join(format!("class_{class:03}")))?;
        }
        let mut counters = vec![0usize; self.num_classes];
        for (img, label) in &self.items {
            let idx = counters[*label];
            counters[*label] += 1;
            img.save_png(&root.join(format!("class_{label:03}/{idx:05}.png")))?;
        }
        Ok(())
    }
}

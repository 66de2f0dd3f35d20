use std::collections::HashMap;

/// Lower-case trigram postings over one string field.
#[derive(Debug, Clone, Default)]
pub struct TrigramIndex {
    postings: HashMap<[char; 3], Vec<u32>>,
}

impl TrigramIndex {
    pub fn insert(&mut self, slot: u32, text: &str) {
        let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
        for w in chars.windows(3) {
            let list = self.postings.entry([w[0], w[1], w[2]]).or_default();
            if list.last() != Some(&slot) {
                list.push(slot);
            }
        }
    }

    /// A superset of slots whose text contains `needle` (case-insensitive),
    /// or `None` when the needle is too short to be indexed.
    pub fn candidates(&self, needle: &str) -> Option<Vec<u32>> {
        let chars: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
        if chars.len() < 3 {
            return None;
        }
        let mut lists: Vec<&Vec<u32>> = Vec::new();
        for w in chars.windows(3) {
            match self.postings.get(&[w[0], w[1], w[2]]) {
                Some(list) => lists.push(list),
                None => return Some(Vec::new()),
            }
        }
        lists.sort_by_key(|l| l.len());
        let mut acc: Vec<u32> = lists[0].clone();
        for list in &lists[1..] {
            acc.retain(|slot| list.binary_search(slot).is_ok());
            if acc.is_empty() {
                break;
            }
        }
        Some(acc)
    }
}

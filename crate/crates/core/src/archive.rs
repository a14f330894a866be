//! Leaf archives: one zip per bottom-tier directory of organized files.
//!
//! Archives are written deterministically (sorted members, fixed timestamps)
//! to a temporary name, verified against the source bytes, and only then
//! renamed into place. A text manifest (`<lo>_<hi>.zip.manifest`) lists each
//! member's SHA-256, size and name.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use walkdir::WalkDir;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::ingest::parse_organized_file_name;
use crate::registry::IcaoRange;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: zip error: {message}")]
    Zip { path: PathBuf, message: String },
    #[error("{path}: verification failed: {message}")]
    Verify { path: PathBuf, message: String },
    #[error("{path}: archive unreadable, rebuild required: {message}")]
    RebuildRequired { path: PathBuf, message: String },
    #[error("{path}: member {name:?} does not belong in this leaf")]
    InvalidMember { path: PathBuf, name: String },
    #[error("injected fault: {0}")]
    Fault(&'static str),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io { path: path.to_path_buf(), source }
}

fn zip_err(path: &Path) -> impl FnOnce(zip::result::ZipError) -> ArchiveError + '_ {
    move |e| ArchiveError::Zip { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberInfo {
    pub name: String,
    pub size: u64,
    /// Lowercase hex SHA-256 of the uncompressed bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafArchive {
    pub path: PathBuf,
    /// Sorted by name.
    pub members: Vec<MemberInfo>,
}

impl LeafArchive {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn total_size(&self) -> u64 {
        self.members.iter().map(|m| m.size).sum()
    }
}

/// Where an update may be made to fail, for crash-safety testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// After this many members were written to the temporary archive.
    AfterMembers(usize),
    /// After verification, before the rename.
    BeforeRename,
}

pub fn manifest_path(archive: &Path) -> PathBuf {
    let mut s = archive.as_os_str().to_os_string();
    s.push(".manifest");
    PathBuf::from(s)
}

fn tmp_path(archive: &Path) -> PathBuf {
    let mut s = archive.as_os_str().to_os_string();
    s.push(".tmp");
    PathBuf::from(s)
}

fn options() -> SimpleFileOptions {
    SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .compression_level(Some(1))
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644)
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn member_name(path: &Path) -> Option<String> {
    path.file_name().and_then(|n| n.to_str()).map(str::to_string)
}

/// Regular files directly inside `dir`, sorted by name.
pub fn list_files(dir: &Path) -> Result<Vec<PathBuf>, ArchiveError> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).map_err(io_err(dir))? {
        let e = e.map_err(io_err(dir))?;
        if e.file_type().map_err(io_err(dir))?.is_file() {
            files.push(e.path());
        }
    }
    files.sort();
    Ok(files)
}

/// When the archive is named after an address range, members must be
/// organized hourly files of aircraft inside that range.
fn check_member(archive: &Path, name: &str) -> Result<(), ArchiveError> {
    let Some(range) = archive.file_name().and_then(|n| n.to_str()).and_then(IcaoRange::parse_label) else {
        return Ok(());
    };
    match parse_organized_file_name(name) {
        Some((_, icao)) if range.contains(icao) => Ok(()),
        _ => Err(ArchiveError::InvalidMember { path: archive.to_path_buf(), name: name.to_string() }),
    }
}

enum Source<'a> {
    Bytes(&'a [u8]),
    Raw(usize),
}

/// Writes, verifies and renames. `members` must be sorted by name.
fn commit(
    target: &Path,
    members: &[(String, Source<'_>, MemberInfo)],
    old: Option<&mut ZipArchive<File>>,
    fault: Option<FaultPoint>,
) -> Result<LeafArchive, ArchiveError> {
    let tmp = tmp_path(target);
    let result = (|| {
        let mut old = old;
        {
            let file = File::create(&tmp).map_err(io_err(&tmp))?;
            let mut w = ZipWriter::new(BufWriter::new(file));
            for (i, (name, src, _)) in members.iter().enumerate() {
                if fault == Some(FaultPoint::AfterMembers(i)) {
                    return Err(ArchiveError::Fault("mid-write"));
                }
                match src {
                    Source::Bytes(b) => {
                        w.start_file(name.as_str(), options()).map_err(zip_err(&tmp))?;
                        w.write_all(b).map_err(io_err(&tmp))?;
                    }
                    Source::Raw(idx) => {
                        let old = old.as_deref_mut().expect("raw copy needs the old archive");
                        let f = old.by_index_raw(*idx).map_err(zip_err(target))?;
                        w.raw_copy_file(f).map_err(zip_err(&tmp))?;
                    }
                }
            }
            let buf = w.finish().map_err(zip_err(&tmp))?;
            let file = buf.into_inner().map_err(|e| ArchiveError::Io { path: tmp.clone(), source: e.into_error() })?;
            file.sync_all().map_err(io_err(&tmp))?;
        }
        let expected: Vec<MemberInfo> = members.iter().map(|m| m.2.clone()).collect();
        let found = scan(&tmp).map_err(|e| ArchiveError::Verify { path: tmp.clone(), message: e.to_string() })?;
        if found != expected {
            return Err(ArchiveError::Verify { path: tmp.clone(), message: "members differ from source".into() });
        }
        if fault == Some(FaultPoint::BeforeRename) {
            return Err(ArchiveError::Fault("before rename"));
        }
        write_manifest(target, &expected)?;
        fs::rename(&tmp, target).map_err(io_err(target))?;
        Ok(LeafArchive { path: target.to_path_buf(), members: expected })
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn write_manifest(archive: &Path, members: &[MemberInfo]) -> Result<(), ArchiveError> {
    let path = manifest_path(archive);
    let tmp = tmp_path(&path);
    let mut text = String::new();
    for m in members {
        text.push_str(&format!("{}  {}  {}\n", m.sha256, m.size, m.name));
    }
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))
}

pub fn read_manifest(archive: &Path) -> Result<Vec<MemberInfo>, ArchiveError> {
    let path = manifest_path(archive);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut parts = l.splitn(3, "  ");
            match (parts.next(), parts.next().and_then(|s| s.parse().ok()), parts.next()) {
                (Some(sha), Some(size), Some(name)) => {
                    Ok(MemberInfo { name: name.to_string(), size, sha256: sha.to_string() })
                }
                _ => Err(ArchiveError::Verify { path: path.clone(), message: format!("bad manifest line {l:?}") }),
            }
        })
        .collect()
}

/// Reads every member and reports name, size and digest in archive order.
pub fn scan(archive: &Path) -> Result<Vec<MemberInfo>, ArchiveError> {
    let mut out = Vec::new();
    for_each_member(archive, |name, bytes| {
        out.push(MemberInfo { name: name.to_string(), size: bytes.len() as u64, sha256: sha_hex(bytes) });
        Ok(())
    })?;
    Ok(out)
}

/// Calls `f` with each member's name and uncompressed bytes, in archive order.
pub fn for_each_member(
    archive: &Path,
    mut f: impl FnMut(&str, &[u8]) -> Result<(), ArchiveError>,
) -> Result<(), ArchiveError> {
    let file = File::open(archive).map_err(io_err(archive))?;
    let mut z = ZipArchive::new(file).map_err(zip_err(archive))?;
    let mut buf = Vec::new();
    for i in 0..z.len() {
        let mut m = z.by_index(i).map_err(zip_err(archive))?;
        buf.clear();
        m.read_to_end(&mut buf).map_err(io_err(archive))?;
        let name = m.name().to_string();
        drop(m);
        f(&name, &buf)?;
    }
    Ok(())
}

pub fn read_members(archive: &Path) -> Result<Vec<(String, Vec<u8>)>, ArchiveError> {
    let mut out = Vec::new();
    for_each_member(archive, |name, bytes| {
        out.push((name.to_string(), bytes.to_vec()));
        Ok(())
    })?;
    Ok(out)
}

pub fn extract_to(archive: &Path, dest: &Path) -> Result<usize, ArchiveError> {
    fs::create_dir_all(dest).map_err(io_err(dest))?;
    let mut n = 0;
    for_each_member(archive, |name, bytes| {
        if name.contains('/') || name.contains('\\') || name == ".." {
            return Err(ArchiveError::InvalidMember { path: archive.to_path_buf(), name: name.to_string() });
        }
        let p = dest.join(name);
        fs::write(&p, bytes).map_err(io_err(&p))?;
        n += 1;
        Ok(())
    })?;
    Ok(n)
}

fn read_sources(files: &[PathBuf]) -> Result<BTreeMap<String, Vec<u8>>, ArchiveError> {
    let mut out = BTreeMap::new();
    for f in files {
        let name = member_name(f).ok_or_else(|| ArchiveError::InvalidMember {
            path: f.clone(),
            name: f.display().to_string(),
        })?;
        let bytes = fs::read(f).map_err(io_err(f))?;
        out.insert(name, bytes);
    }
    Ok(out)
}

fn remove_sources(files: &[PathBuf]) -> Result<(), ArchiveError> {
    for f in files {
        fs::remove_file(f).map_err(io_err(f))?;
    }
    Ok(())
}

/// Packs every file in `dir` into `target`, then deletes the loose files and
/// the directory if it became empty. An empty directory yields `None` and no
/// archive. On any failure the loose files are left untouched.
pub fn pack_leaf(dir: &Path, target: &Path) -> Result<Option<LeafArchive>, ArchiveError> {
    pack_leaf_with(dir, target, None)
}

pub fn pack_leaf_with(dir: &Path, target: &Path, fault: Option<FaultPoint>) -> Result<Option<LeafArchive>, ArchiveError> {
    let files = list_files(dir)?;
    if files.is_empty() {
        return Ok(None);
    }
    let sources = read_sources(&files)?;
    for name in sources.keys() {
        check_member(target, name)?;
    }
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let members: Vec<(String, Source<'_>, MemberInfo)> = sources
        .iter()
        .map(|(name, bytes)| {
            let info = MemberInfo { name: name.clone(), size: bytes.len() as u64, sha256: sha_hex(bytes) };
            (name.clone(), Source::Bytes(bytes), info)
        })
        .collect();
    let leaf = commit(target, &members, None, fault)?;
    remove_sources(&files)?;
    let _ = fs::remove_dir(dir);
    Ok(Some(leaf))
}

/// Merges `new_files` into an existing archive. A member with the same name
/// is replaced by the new file; an identical member leaves the archive
/// untouched. The new loose files are deleted once the update is committed.
/// The previous archive stays valid if anything fails.
pub fn update_archive(archive: &Path, new_files: &[PathBuf]) -> Result<LeafArchive, ArchiveError> {
    update_archive_with(archive, new_files, None)
}

pub fn update_archive_with(
    archive: &Path,
    new_files: &[PathBuf],
    fault: Option<FaultPoint>,
) -> Result<LeafArchive, ArchiveError> {
    let rebuild = |message: String| ArchiveError::RebuildRequired { path: archive.to_path_buf(), message };
    let file = File::open(archive).map_err(io_err(archive))?;
    let mut old = ZipArchive::new(file).map_err(|e| rebuild(e.to_string()))?;
    let existing = scan(archive).map_err(|e| rebuild(e.to_string()))?;

    let sources = read_sources(new_files)?;
    for name in sources.keys() {
        check_member(archive, name)?;
    }

    let mut merged: BTreeMap<String, (Source<'_>, MemberInfo)> = BTreeMap::new();
    for (idx, m) in existing.iter().enumerate() {
        merged.insert(m.name.clone(), (Source::Raw(idx), m.clone()));
    }
    let mut changed = false;
    for (name, bytes) in &sources {
        let info = MemberInfo { name: name.clone(), size: bytes.len() as u64, sha256: sha_hex(bytes) };
        if merged.get(name).is_some_and(|(_, m)| *m == info) {
            continue;
        }
        changed = true;
        merged.insert(name.clone(), (Source::Bytes(bytes), info));
    }
    let in_order = existing.windows(2).all(|w| w[0].name < w[1].name);

    let leaf = if changed || !in_order {
        let members: Vec<(String, Source<'_>, MemberInfo)> =
            merged.into_iter().map(|(name, (src, info))| (name, src, info)).collect();
        commit(archive, &members, Some(&mut old), fault)?
    } else {
        if fault == Some(FaultPoint::BeforeRename) {
            return Err(ArchiveError::Fault("before rename"));
        }
        if read_manifest(archive).ok().as_ref() != Some(&existing) {
            write_manifest(archive, &existing)?;
        }
        LeafArchive { path: archive.to_path_buf(), members: existing }
    };
    remove_sources(new_files)?;
    Ok(leaf)
}

/// Directories under `root` that directly contain at least one file.
pub fn find_leaves(root: &Path) -> Result<Vec<PathBuf>, ArchiveError> {
    let mut leaves = Vec::new();
    for e in WalkDir::new(root).min_depth(1).sort_by_file_name() {
        let e = e.map_err(|e| ArchiveError::Io {
            path: root.to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("directory loop")),
        })?;
        if e.file_type().is_file() {
            let parent = e.path().parent().expect("file under root").to_path_buf();
            if leaves.last() != Some(&parent) {
                leaves.push(parent);
            }
        }
    }
    leaves.sort();
    leaves.dedup();
    Ok(leaves)
}

/// Archive path for a leaf directory: the same relative location with the
/// range label turned into `<label>.zip`.
pub fn archive_path_for(leaf: &Path, organized_root: &Path, archive_root: &Path) -> Option<PathBuf> {
    let rel = leaf.strip_prefix(organized_root).ok()?;
    let name = rel.file_name()?.to_str()?;
    Some(archive_root.join(rel.parent()?).join(format!("{name}.zip")))
}

/// Packs a leaf into a new archive or merges it into the existing one.
pub fn pack_or_update(leaf: &Path, organized_root: &Path, archive_root: &Path) -> Result<Option<LeafArchive>, ArchiveError> {
    let target = archive_path_for(leaf, organized_root, archive_root).ok_or_else(|| ArchiveError::Io {
        path: leaf.to_path_buf(),
        source: io::Error::new(io::ErrorKind::InvalidInput, "leaf is not under the organized root"),
    })?;
    if target.exists() {
        let files = list_files(leaf)?;
        if files.is_empty() {
            return Ok(None);
        }
        let leaf_archive = update_archive(&target, &files)?;
        let _ = fs::remove_dir(leaf);
        Ok(Some(leaf_archive))
    } else {
        pack_leaf(leaf, &target)
    }
}

/// All `.zip` archives under `root`, sorted.
pub fn find_archives(root: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "zip"))
        .map(|e| e.into_path())
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        fs::create_dir_all(dir).unwrap();
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn pack_roundtrip_and_cleanup() {
        let t = tempfile::tempdir().unwrap();
        let leaf = t.path().join("org/2020/Rotorcraft/Seats_001_010/A00C12_A00D20");
        let names = ["2020-03-16_05_A00C12.csv", "2020-03-16_06_A00C12.csv", "2020-03-16_05_A00D1F.csv"];
        for (i, n) in names.iter().enumerate() {
            write(&leaf, n, &format!("time\n{i}\n"));
        }
        let target = t.path().join("arc/2020/Rotorcraft/Seats_001_010/A00C12_A00D20.zip");
        let a = pack_leaf(&leaf, &target).unwrap().unwrap();
        assert_eq!(a.member_count(), 3);
        assert!(!leaf.exists());
        assert_eq!(read_manifest(&target).unwrap(), a.members);
        let out = t.path().join("x");
        assert_eq!(extract_to(&target, &out).unwrap(), 3);
        assert_eq!(fs::read_to_string(out.join("2020-03-16_05_A00D1F.csv")).unwrap(), "time\n2\n");
    }

    #[test]
    fn pack_is_deterministic() {
        let t = tempfile::tempdir().unwrap();
        let mut bytes = Vec::new();
        for k in 0..2 {
            let leaf = t.path().join(format!("l{k}"));
            write(&leaf, "b.csv", "bbb");
            write(&leaf, "a.csv", "aaa");
            let target = t.path().join(format!("o{k}/x.zip"));
            pack_leaf(&leaf, &target).unwrap();
            bytes.push(fs::read(&target).unwrap());
        }
        assert_eq!(bytes[0], bytes[1]);
    }

    #[test]
    fn empty_dir_makes_no_archive() {
        let t = tempfile::tempdir().unwrap();
        let target = t.path().join("a.zip");
        assert!(pack_leaf(t.path(), &target).unwrap().is_none());
        assert!(!target.exists());
    }

    #[test]
    fn foreign_member_is_rejected() {
        let t = tempfile::tempdir().unwrap();
        let leaf = t.path().join("A00C12_A00D20");
        let f = write(&leaf, "2020-03-16_05_B00000.csv", "x");
        let err = pack_leaf(&leaf, &t.path().join("out/A00C12_A00D20.zip")).unwrap_err();
        assert!(matches!(err, ArchiveError::InvalidMember { .. }));
        assert!(f.exists());
    }

    #[test]
    fn update_adds_replaces_and_is_idempotent() {
        let t = tempfile::tempdir().unwrap();
        let leaf = t.path().join("leaf");
        for n in ["a.csv", "b.csv", "c.csv"] {
            write(&leaf, n, n);
        }
        let target = t.path().join("leaf.zip");
        pack_leaf(&leaf, &target).unwrap();

        let new = t.path().join("new");
        let files = vec![write(&new, "d.csv", "d"), write(&new, "e.csv", "e")];
        assert_eq!(update_archive(&target, &files).unwrap().member_count(), 5);

        let before = fs::read(&target).unwrap();
        let same = vec![write(&new, "a.csv", "a.csv")];
        assert_eq!(update_archive(&target, &same).unwrap().member_count(), 5);
        assert_eq!(fs::read(&target).unwrap(), before);

        let newer = vec![write(&new, "a.csv", "A2")];
        update_archive(&target, &newer).unwrap();
        let m = read_members(&target).unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(m[0], ("a.csv".to_string(), b"A2".to_vec()));
    }

    #[test]
    fn faults_leave_old_archive_valid() {
        let t = tempfile::tempdir().unwrap();
        let leaf = t.path().join("leaf");
        for n in ["a.csv", "b.csv", "c.csv"] {
            write(&leaf, n, n);
        }
        let target = t.path().join("leaf.zip");
        let original = pack_leaf(&leaf, &target).unwrap().unwrap();
        let new = t.path().join("new");
        for fault in [FaultPoint::AfterMembers(2), FaultPoint::BeforeRename] {
            let files = vec![write(&new, "d.csv", "d")];
            assert!(matches!(update_archive_with(&target, &files, Some(fault)), Err(ArchiveError::Fault(_))));
            assert_eq!(scan(&target).unwrap(), original.members);
            assert!(files[0].exists());
            assert!(!tmp_path(&target).exists());
        }
    }

    #[test]
    fn corrupt_archive_requires_rebuild() {
        let t = tempfile::tempdir().unwrap();
        let target = t.path().join("bad.zip");
        fs::write(&target, b"not a zip").unwrap();
        let f = write(&t.path().join("n"), "a.csv", "a");
        assert!(matches!(update_archive(&target, &[f]), Err(ArchiveError::RebuildRequired { .. })));
    }

    #[test]
    fn leaves_and_paths() {
        let t = tempfile::tempdir().unwrap();
        let org = t.path().join("org");
        write(&org.join("2020/Glider/Seats_001_010/A00001_A00002"), "f.csv", "x");
        write(&org.join("2020/Unknown/2020-03-16_05/000001_000100"), "g.csv", "y");
        fs::create_dir_all(org.join("2020/Balloon/Seats_Unknown/A00005_A00006")).unwrap();
        let leaves = find_leaves(&org).unwrap();
        assert_eq!(leaves.len(), 2);
        assert_eq!(
            archive_path_for(&leaves[0], &org, Path::new("/arc")).unwrap(),
            PathBuf::from("/arc/2020/Glider/Seats_001_010/A00001_A00002.zip")
        );
    }
}

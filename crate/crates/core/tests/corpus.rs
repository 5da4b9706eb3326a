use annoqa::corpus::*;

#[test]
fn synthetic_corpus_loads_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let c = synth_corpus(1, &SynthParams::default(), dir.path()).unwrap();
    for v in c.violations() {
        eprintln!("{v}");
    }
    eprintln!(
        "docs {} concepts {} attrs {} rels {} chains {} classes {}",
        c.documents().len(),
        c.concepts().len(),
        c.attributes().len(),
        c.relations().len(),
        c.chains().len(),
        c.classes().len()
    );
    assert!(c.violations().is_empty());
}

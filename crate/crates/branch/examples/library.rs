//! The shared tree library on disk: owners, public/private visibility,
//! trees reused inside other trees, and what survives a restart.

use branch::demo;
use branch_core::dataset::Label;
use branch_core::store::{Store, Visibility};
use branch_core::tree::{DecisionTree, Node, SplitRule, TreeRefRule};

const ALICE: &str = "alice-token-0123456789";
const BOB: &str = "bob-token-0123456789ab";

fn main() -> branch_core::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    let store = Store::open_dir(dir.path())?;
    let rec = store.insert_dataset(demo::walkthrough_dataset(), "synthetic cohort")?;
    let sig = rec.dataset.signature().clone();

    let shared = store.create_tree(demo::walkthrough_tree(&sig), ALICE, Visibility::Public)?;
    let draft = store.create_tree(demo::walkthrough_tree(&sig), ALICE, Visibility::Private)?;
    println!(
        "alice sees {} trees, bob sees {}, anonymous sees {}",
        store.snapshot().list_trees(Some(ALICE), None).len(),
        store.snapshot().list_trees(Some(BOB), None).len(),
        store.snapshot().list_trees(None, None).len()
    );
    println!("bob opening alice's draft -> {}", store.snapshot().tree(draft.id(), Some(BOB)).unwrap_err().code());

    // Bob reuses Alice's public tree as a node of his own.
    let reuse = DecisionTree::new(
        "",
        "second opinion",
        sig.clone(),
        Node::split(
            SplitRule::TreeRef(TreeRefRule { tree_id: shared.id().to_owned() }),
            Node::split(SplitRule::threshold("ERBB2", 6.0), Node::leaf(Label::Positive), Node::leaf(Label::Negative)),
            Node::leaf(Label::Negative),
        ),
    );
    let bobs = store.create_tree(reuse, BOB, Visibility::Public)?;
    println!("bob's tree references {:?}", bobs.tree.referenced_ids());
    println!("alice deleting the referenced tree -> {}", store.delete_tree(shared.id(), ALICE).unwrap_err().code());
    println!(
        "bob editing alice's tree -> {}",
        store.update_tree(shared.id(), demo::walkthrough_tree(&sig), BOB, None).unwrap_err().code()
    );

    let before = store.export()?;
    drop(store);
    let reopened = Store::open_dir(dir.path())?;
    println!("{} files, identical after reopen: {}", before.len(), reopened.export()? == before);
    Ok(())
}

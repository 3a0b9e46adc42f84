import random

import pytest

from thingchain.codec import decode_values, encode_values


@pytest.fixture
def stats_feeds(node, alice):
    """Two feeds with different series: the 'buggy' first deployment and its
    recalibrated replacement."""
    _, feed_a = node.deploy(alice, "feed")
    _, feed_b = node.deploy(alice, "feed")
    for tick in range(1, 21):
        node.call(alice, feed_a, "push", encode_values([1_000 * tick, "C", tick]))
        node.call(alice, feed_b, "push", encode_values([1_000 * tick + 250, "C", tick]))
    node.seal_block()
    return feed_a, feed_b


@pytest.fixture
def skeleton(node, alice):
    _, addr = node.deploy(alice, "skeleton")
    node.seal_block()
    return addr


def _routed_stats(node, skeleton, window):
    """The two-step call: resolve the implementation, then invoke it."""
    impl = node.static(skeleton, "lookup", ["stats"])
    return node.static(impl, "stats", list(window))


def test_lookup_update_lookup_with_history(node, alice, skeleton, stats_feeds):
    feed_a, feed_b = stats_feeds
    node.call(alice, skeleton, "update", encode_values(["stats", feed_a]))
    node.seal_block()
    assert node.static(skeleton, "lookup", ["stats"]) == feed_a
    node.call(alice, skeleton, "update", encode_values(["stats", feed_b]))
    node.seal_block()
    assert node.static(skeleton, "lookup", ["stats"]) == feed_b
    history = [v for _, v in node.history(skeleton, b"impl/stats")]
    assert history == [feed_a, feed_b]


def test_non_owner_update_rejected(node, alice, bob, skeleton, stats_feeds):
    receipt = node.call(bob, skeleton, "update",
                        encode_values(["stats", stats_feeds[0]]))
    node.seal_block()
    assert receipt.reason == "NotOwner"


def test_lookup_unknown_method(node, alice, skeleton):
    receipt = node.call(alice, skeleton, "lookup", encode_values(["nope"]))
    node.seal_block()
    assert receipt.reason == "MethodNotFound"


def test_swap_changes_routed_behavior(node, alice, skeleton, stats_feeds):
    feed_a, feed_b = stats_feeds
    node.call(alice, skeleton, "update", encode_values(["stats", feed_a]))
    node.seal_block()
    before = decode_values(_routed_stats(node, skeleton, (1, 20)))
    node.call(alice, skeleton, "update", encode_values(["stats", feed_b]))
    node.seal_block()
    after = decode_values(_routed_stats(node, skeleton, (1, 20)))
    assert before != after
    assert after[2] == before[2] + 250  # recalibrated average


def test_routed_equals_direct_on_random_windows(node, alice, skeleton, stats_feeds):
    _, feed_b = stats_feeds
    node.call(alice, skeleton, "update", encode_values(["stats", feed_b]))
    node.seal_block()
    rng = random.Random(17)
    for _ in range(50):
        lo = rng.randint(1, 20)
        hi = rng.randint(lo, 20)
        routed = _routed_stats(node, skeleton, (lo, hi))
        direct = node.static(feed_b, "stats", [lo, hi])
        assert routed == direct

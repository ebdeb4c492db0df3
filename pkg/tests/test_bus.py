"""Broker behaviour: routing, ordering, idempotence, and delivery properties."""

import random

import pytest

from lockon.bus import Envelope, MessageBus, ProtocolError, Publisher, validate_topic


def env(topic, publisher="node", seq=0, tick=0, payload=b"x"):
    return Envelope(topic=topic, payload=payload, publisher_id=publisher, seq=seq, tick=tick)


class TestTopicValidation:
    def test_accepts_protocol_topics(self):
        for name in ("/telemetry", "/telemetry/response", "/land", "/signal/process_image"):
            assert validate_topic(name) == name

    def test_rejects_missing_leading_slash(self):
        with pytest.raises(ProtocolError):
            validate_topic("telemetry")

    def test_rejects_empty_and_whitespace(self):
        with pytest.raises(ProtocolError):
            validate_topic("")
        with pytest.raises(ProtocolError):
            validate_topic("/has space")


class TestSubscribe:
    def test_subscription_receives_later_publish(self):
        bus = MessageBus()
        bus.subscribe("vision", "/signal/process_image")
        bus.publish(env("/signal/process_image", publisher="autonomous"))
        bus.deliver()
        received = bus.drain("vision")
        assert len(received) == 1
        assert received[0].topic == "/signal/process_image"

    def test_subscribe_is_idempotent(self):
        bus = MessageBus()
        bus.subscribe("vision", "/signal/process_image")
        bus.subscribe("vision", "/signal/process_image")
        count = bus.publish(env("/signal/process_image"))
        bus.deliver()
        assert count == 1
        assert len(bus.drain("vision")) == 1

    def test_malformed_topic_rejected(self):
        bus = MessageBus()
        with pytest.raises(ProtocolError):
            bus.subscribe("vision", "telemetry")

    def test_subscribe_after_shutdown_rejected(self):
        bus = MessageBus()
        bus.shutdown()
        with pytest.raises(ProtocolError):
            bus.subscribe("vision", "/land")


class TestPublish:
    def test_delivery_count_equals_subscribers(self):
        bus = MessageBus()
        for client in ("vision", "proxy", "broker-logger"):
            bus.subscribe(client, "/land")
        assert bus.publish(env("/land", payload=b"")) == 3

    def test_zero_subscribers_is_not_an_error(self):
        bus = MessageBus()
        assert bus.publish(env("/lock")) == 0

    def test_per_publisher_fifo(self):
        bus = MessageBus()
        bus.subscribe("sub", "/telemetry")
        bus.publish(env("/telemetry", publisher="uav", seq=5))
        bus.publish(env("/telemetry", publisher="uav", seq=6))
        bus.deliver()
        seqs = [e.seq for e in bus.drain("sub")]
        assert seqs == [5, 6]

    def test_publish_after_shutdown_rejected(self):
        bus = MessageBus()
        bus.shutdown()
        with pytest.raises(ProtocolError):
            bus.publish(env("/land"))

    def test_non_increasing_seq_rejected(self):
        bus = MessageBus()
        bus.publish(env("/telemetry", seq=3))
        with pytest.raises(ProtocolError):
            bus.publish(env("/telemetry", seq=3))

    def test_empty_payload_is_legal(self):
        bus = MessageBus()
        bus.subscribe("sub", "/land")
        bus.publish(env("/land", payload=b""))
        bus.deliver()
        assert bus.drain("sub")[0].payload == b""


class TestUnsubscribe:
    def test_unsubscribe_stops_delivery(self):
        bus = MessageBus()
        bus.subscribe("sub", "/lock")
        assert bus.unsubscribe("sub", "/lock") is True
        bus.publish(env("/lock"))
        bus.deliver()
        assert bus.drain("sub") == []

    def test_unsubscribe_without_subscription_is_false(self):
        bus = MessageBus()
        assert bus.unsubscribe("sub", "/lock") is False

    def test_lifecycle_subscribe_publish_unsubscribe_publish(self):
        bus = MessageBus()
        bus.subscribe("sub", "/lock")
        first = bus.publish(env("/lock", seq=0))
        bus.unsubscribe("sub", "/lock")
        second = bus.publish(env("/lock", seq=1))
        bus.deliver()
        assert (first, second) == (1, 0)
        assert len(bus.drain("sub")) == 1


class TestPublisherHandle:
    def test_seq_increments_per_send(self):
        bus = MessageBus()
        bus.subscribe("sub", "/telemetry")
        publisher = Publisher(bus, "uav")
        publisher.send("/telemetry", b"a", tick=0)
        publisher.send("/telemetry", b"b", tick=1)
        bus.deliver()
        assert [e.seq for e in bus.drain("sub")] == [0, 1]


class TestDeliveryProperties:
    """Randomized interleavings of the four delivery guarantees."""

    TOPICS = ["/t/a", "/t/b", "/t/c", "/t/d"]
    CLIENTS = ["c1", "c2", "c3", "c4"]
    PUBLISHERS = ["p1", "p2", "p3"]

    def test_randomized_interleavings(self):
        rng = random.Random(20240817)
        bus = MessageBus()
        subscribed: dict[str, set[str]] = {c: set() for c in self.CLIENTS}
        expected: dict[str, list[Envelope]] = {c: [] for c in self.CLIENTS}
        received: dict[str, list[Envelope]] = {c: [] for c in self.CLIENTS}
        seqs = {p: 0 for p in self.PUBLISHERS}

        n_ops = 12_000
        for _ in range(n_ops):
            op = rng.random()
            client = rng.choice(self.CLIENTS)
            topic = rng.choice(self.TOPICS)
            if op < 0.25:
                bus.subscribe(client, topic)
                subscribed[client].add(topic)
            elif op < 0.40:
                removed = bus.unsubscribe(client, topic)
                assert removed == (topic in subscribed[client])
                subscribed[client].discard(topic)
            else:
                publisher = rng.choice(self.PUBLISHERS)
                envelope = Envelope(
                    topic=topic,
                    payload=str(seqs[publisher]).encode(),
                    publisher_id=publisher,
                    seq=seqs[publisher],
                    tick=0,
                )
                seqs[publisher] += 1
                count = bus.publish(envelope)
                recipients = [c for c in self.CLIENTS if topic in subscribed[c]]
                assert count == len(recipients)
                for c in recipients:
                    expected[c].append(envelope)
                bus.deliver()
                for c in self.CLIENTS:
                    received[c].extend(bus.drain(c))

        for client in self.CLIENTS:
            received[client].extend(bus.drain(client))
            # Delivery completeness: exactly the envelopes whose topic the
            # client was subscribed to at publish time, in publish order.
            assert received[client] == expected[client]
            # At-most-once: no duplicated (publisher, seq).
            keys = [(e.publisher_id, e.seq) for e in received[client]]
            assert len(keys) == len(set(keys))
            # Per-publisher FIFO: seqs strictly increase.
            for publisher in self.PUBLISHERS:
                got = [e.seq for e in received[client] if e.publisher_id == publisher]
                assert got == sorted(got)
                assert len(set(got)) == len(got)

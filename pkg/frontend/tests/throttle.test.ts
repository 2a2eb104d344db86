import { describe, expect, it } from "vitest";

import { UpdateThrottle } from "../src/throttle.js";

/** Manual clock + timer wheel so rate behavior is tested deterministically. */
class FakeTime {
  now = 0;
  private timers: { at: number; fn: () => void; id: number }[] = [];
  private nextId = 1;

  schedule = (fn: () => void, ms: number): unknown => {
    const id = this.nextId++;
    this.timers.push({ at: this.now + ms, fn, id });
    return id;
  };

  cancel = (handle: unknown): void => {
    this.timers = this.timers.filter((t) => t.id !== handle);
  };

  advance(ms: number): void {
    const end = this.now + ms;
    for (;;) {
      const due = this.timers.filter((t) => t.at <= end)
        .sort((a, b) => a.at - b.at)[0];
      if (due === undefined) break;
      this.timers = this.timers.filter((t) => t.id !== due.id);
      this.now = due.at;
      due.fn();
    }
    this.now = end;
  }
}

function makeThrottle(autoAck: boolean) {
  const time = new FakeTime();
  const sent: number[] = [];
  const throttle: UpdateThrottle<number> = new UpdateThrottle<number>(
    (payload) => {
      sent.push(payload);
      if (autoAck) {
        // response arrives 5 ms later
        time.schedule(() => throttle.acknowledge(), 5);
      }
    },
    { now: () => time.now, schedule: time.schedule, cancel: time.cancel },
  );
  return { time, sent, throttle };
}

describe("UpdateThrottle", () => {
  it("caps 300 events/s input at 30 messages/s", () => {
    const time = new FakeTime();
    const sendTimes: number[] = [];
    const throttle: UpdateThrottle<number> = new UpdateThrottle<number>(
      () => {
        sendTimes.push(time.now);
        time.schedule(() => throttle.acknowledge(), 5);
      },
      { now: () => time.now, schedule: time.schedule, cancel: time.cancel },
    );
    let event = 0;
    // 300 events/s for two seconds
    for (let i = 0; i < 600; i++) {
      throttle.update(event++);
      time.advance(1000 / 300);
    }
    // consecutive sends are spaced by at least the 30 Hz interval
    for (let i = 1; i < sendTimes.length; i++) {
      expect(sendTimes[i] - sendTimes[i - 1]).toBeGreaterThanOrEqual(1000 / 30 - 1e-9);
    }
    // and any half-open one-second window holds at most 30 messages
    for (const start of [0, 500, 1000]) {
      const inWindow = sendTimes.filter((t) => t >= start && t < start + 1000);
      expect(inWindow.length).toBeLessThanOrEqual(30);
      expect(inWindow.length).toBeGreaterThanOrEqual(25);
    }
  });

  it("sends nothing while idle", () => {
    const { time, sent, throttle } = makeThrottle(true);
    throttle.update(1);
    time.advance(2000);
    expect(sent).toEqual([1]);
    time.advance(5000); // idle: no slider events, no sends
    expect(sent).toEqual([1]);
  });

  it("keeps at most one request in flight", () => {
    const { time, sent, throttle } = makeThrottle(false);
    throttle.update(1);
    time.advance(100);
    throttle.update(2);
    time.advance(1000);
    expect(sent).toEqual([1]); // unacknowledged: nothing else goes out
    throttle.acknowledge();
    time.advance(1);
    expect(sent).toEqual([1, 2]); // the coalesced latest state follows
  });

  it("coalesces bursts to the newest payload", () => {
    const { time, sent, throttle } = makeThrottle(true);
    throttle.update(1);
    time.advance(6); // first send acknowledged
    for (let value = 2; value <= 50; value++) {
      throttle.update(value);
    }
    time.advance(100);
    expect(sent[0]).toBe(1);
    expect(sent[sent.length - 1]).toBe(50);
    expect(sent.length).toBeLessThan(6);
  });

  it("reset clears the in-flight marker so a resend can happen", () => {
    const { time, sent, throttle } = makeThrottle(false);
    throttle.update(1);
    expect(sent).toEqual([1]);
    throttle.reset(); // connection dropped, no acknowledgement will come
    time.advance(1000);
    throttle.update(1);
    time.advance(1);
    expect(sent).toEqual([1, 1]); // full state resent once
  });
});

import { describe, expect, it } from "vitest";

import {
  buildExamples,
  parseAnnotationCsv,
  parsePseudoScoreJson,
  synthesizeExamples,
} from "../src/data.js";
import { classifyPhoneme } from "../src/features.js";

describe("parseAnnotationCsv", () => {
  it("parses ordered phone intervals", () => {
    const phones = parseAnnotationCsv("phoneme,start_s,end_s\nl,0.00,0.08\na,0.08,0.55\n");
    expect(phones).toEqual([
      { phoneme: "l", startS: 0.0, endS: 0.08 },
      { phoneme: "a", startS: 0.08, endS: 0.55 },
    ]);
  });

  it("rejects a bad header", () => {
    expect(() => parseAnnotationCsv("phone,begin,end\na,0,1\n")).toThrow(/header/);
  });

  it("rejects empty intervals", () => {
    expect(() => parseAnnotationCsv("phoneme,start_s,end_s\na,0.5,0.5\n")).toThrow(/interval/);
  });
});

describe("parsePseudoScoreJson", () => {
  it("reads a note list", () => {
    const notes = parsePseudoScoreJson(
      JSON.stringify({ notes: [{ midi: 62, start_frame: 0, end_frame: 150 }] })
    );
    expect(notes).toEqual([{ midi: 62, startFrame: 0, endFrame: 150 }]);
  });

  it("rejects other JSON shapes", () => {
    expect(() => parsePseudoScoreJson('{"foo": 1}')).toThrow(/notes/);
  });
});

describe("buildExamples", () => {
  it("attaches covering note lengths and neighbours", () => {
    const phones = parseAnnotationCsv(
      "phoneme,start_s,end_s\nl,0.00,0.10\na,0.10,0.90\nN,0.90,1.20\n"
    );
    const notes = [{ midi: 62, startFrame: 0, endFrame: 120 }];
    const examples = buildExamples(phones, notes);
    expect(examples).toHaveLength(3);
    expect(examples[0]).toEqual({
      phoneme: "l",
      prev: null,
      next: "a",
      noteFrames: 120,
      durationFrames: 10,
    });
    expect(examples[1].prev).toBe("l");
    expect(examples[1].next).toBe("N");
    expect(examples[1].durationFrames).toBe(80);
  });

  it("marks phones outside any note with zero note length", () => {
    const phones = parseAnnotationCsv("phoneme,start_s,end_s\na,2.00,2.50\n");
    const examples = buildExamples(phones, [{ midi: 60, startFrame: 0, endFrame: 100 }]);
    expect(examples[0].noteFrames).toBe(0);
  });
});

describe("synthesizeExamples", () => {
  const spec = {
    a: [{ weight: 1, meanFrames: 30, stdFrames: 4 }],
    l: [{ weight: 1, meanFrames: 12, stdFrames: 3 }],
  };

  it("is reproducible from the seed", () => {
    expect(synthesizeExamples(spec, 50, 7)).toEqual(synthesizeExamples(spec, 50, 7));
  });

  it("differs across seeds and floors durations at one frame", () => {
    const a = synthesizeExamples(spec, 50, 7);
    const b = synthesizeExamples(spec, 50, 8);
    expect(a).not.toEqual(b);
    for (const ex of a) expect(ex.durationFrames).toBeGreaterThanOrEqual(1);
  });
});

describe("classifyPhoneme", () => {
  it("mirrors the consumer's class buckets", () => {
    expect(classifyPhoneme("a")).toBe("vowel");
    expect(classifyPhoneme("ts`")).toBe("consonant");
    expect(classifyPhoneme("sil")).toBe("silence");
    expect(classifyPhoneme(null)).toBe("silence");
  });
});

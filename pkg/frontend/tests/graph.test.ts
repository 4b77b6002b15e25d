import { describe, expect, it } from "vitest";

import {
  GestureError,
  GraphViewModel,
  canonicalRelationKeys,
  canonicalizeText,
  exportGraph,
  importGraph,
} from "../src/graph.js";
import type { SceneGraphDoc } from "../src/types.js";
import { fixtureJson } from "./stubServer.js";

const horseDoc = fixtureJson<SceneGraphDoc>("extract_horse.json");

describe("canonicalizeText", () => {
  it("lowercases, trims, and collapses whitespace", () => {
    expect(canonicalizeText("  Sitting  ON ")).toBe("sitting on");
    expect(canonicalizeText("dog")).toBe("dog");
    expect(canonicalizeText("Large\tHorse")).toBe("large horse");
  });
});

describe("export/import round-trip", () => {
  it("preserves the canonical relation set of the extracted graph", () => {
    const vm = GraphViewModel.fromDoc(horseDoc);
    const back = importGraph(exportGraph(vm));
    expect(canonicalRelationKeys(back.toDoc())).toEqual(canonicalRelationKeys(horseDoc));
  });

  it("preserves attributes and multi-relation graphs", () => {
    const doc: SceneGraphDoc = {
      objects: [
        { id: "a", name: "Dog", attributes: ["Brown", " small "] },
        { id: "b", name: "bench" },
        { id: "c", name: "tree" },
      ],
      relations: [
        { subject_id: "a", predicate: "sitting  on", object_id: "b" },
        { subject_id: "c", predicate: "behind", object_id: "b" },
      ],
    };
    const back = importGraph(exportGraph(GraphViewModel.fromDoc(doc)));
    expect(canonicalRelationKeys(back.toDoc())).toEqual([
      "brown small dog | sitting on | bench",
      "tree | behind | bench",
    ]);
  });

  it("round-trips layout-free even after drags", () => {
    const vm = GraphViewModel.fromDoc(horseDoc);
    vm.nodes[0]!.x = 123;
    vm.nodes[0]!.y = 456;
    vm.selectedNodeId = vm.nodes[0]!.id;
    const doc = JSON.parse(exportGraph(vm));
    expect(Object.keys(doc)).toEqual(["objects", "relations"]);
    expect(JSON.stringify(doc)).not.toContain("123");
  });

  it("rejects malformed documents", () => {
    expect(() => importGraph("{nope")).toThrow(GestureError);
    expect(() => importGraph('{"objects": 3}')).toThrow(GestureError);
    expect(() =>
      importGraph(
        JSON.stringify({
          objects: [],
          relations: [{ subject_id: "ghost", predicate: "on", object_id: "ghost2" }],
        }),
      ),
    ).toThrow(/unknown id/);
  });
});

describe("gestures", () => {
  function freshVm(): GraphViewModel {
    return GraphViewModel.fromDoc(horseDoc);
  }

  it("rename maps to replace_node_name and mutates the model", () => {
    const vm = freshVm();
    const op = vm.renameNode("o1", " Zebra ");
    expect(op).toEqual({ kind: "replace_node_name", node: { id: "o1" }, new_name: "zebra" });
    expect(vm.node("o1").name).toBe("zebra");
    expect(vm.dirty).toBe(true);
  });

  it("set_attributes cleans empties", () => {
    const vm = freshVm();
    const op = vm.setAttributes("o1", [" Striped", "", "tall "]);
    expect(op).toEqual({
      kind: "set_attributes",
      node: { id: "o1" },
      attributes: ["striped", "tall"],
    });
  });

  it("add_relation rejects self-relations and duplicates", () => {
    const vm = freshVm();
    expect(() => vm.addRelation("o1", "near", "o1")).toThrow(/itself/);
    const moon = vm.addNode("moon");
    const op = vm.addRelation(moon.id, "Above", "o2");
    expect(op.kind).toBe("add_relation");
    expect(() => vm.addRelation(moon.id, "above", "o2")).toThrow(/already exists/);
  });

  it("remove_node drops touching relations", () => {
    const vm = freshVm();
    const op = vm.deleteNode("o1");
    expect(op).toEqual({ kind: "remove_node", node: { id: "o1" } });
    expect(vm.relations).toEqual([]);
    expect(vm.nodes.map((n) => n.id)).toEqual(["o2"]);
  });

  it("delete_relation maps to remove_relation with the rendered ids", () => {
    const vm = freshVm();
    const op = vm.deleteRelation(0);
    expect(op).toEqual({
      kind: "remove_relation",
      subject: { id: "o1" },
      predicate: "standing on",
      object: { id: "o2" },
    });
    expect(vm.relations).toEqual([]);
  });

  it("fresh node ids never collide", () => {
    const vm = freshVm();
    const first = vm.addNode("cloud");
    const second = vm.addNode("sun");
    const ids = new Set(vm.nodes.map((n) => n.id));
    expect(ids.size).toBe(vm.nodes.length);
    expect(first.id).not.toBe(second.id);
  });
});

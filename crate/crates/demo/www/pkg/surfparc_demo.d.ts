/* tslint:disable */
/* eslint-disable */

/**
 * An icosphere with geodesic-Voronoi labels and its pooling clusters.
 */
export class Parcellation {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Cluster id of each vertex after `rounds` (0, 1 or 2) pooling rounds.
     */
    clusters(rounds: number): Uint32Array;
    /**
     * Vertex counts before pooling, after one round and after two.
     */
    counts(): Uint32Array;
    /**
     * Three vertex indices per face.
     */
    faces(): Uint32Array;
    labels(): Uint32Array;
    constructor(level: number, regions: number, seed: bigint);
    /**
     * `x y z` per vertex.
     */
    positions(): Float64Array;
}

/**
 * Values of every 1-D basis function at `samples` evenly spaced points,
 * row-major as `size × samples`.
 */
export function basis_curves(degree: number, size: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_parcellation_free: (a: number, b: number) => void;
    readonly basis_curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly parcellation_clusters: (a: number, b: number) => [number, number];
    readonly parcellation_counts: (a: number) => [number, number];
    readonly parcellation_faces: (a: number) => [number, number];
    readonly parcellation_labels: (a: number) => [number, number];
    readonly parcellation_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly parcellation_positions: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;

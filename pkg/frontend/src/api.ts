/**
 * Typed client for the query service. The editor is a thin client: every
 * piece of rendered state comes from these four endpoints and nothing else.
 */

export interface Match {
  id: number;
  kind: string;
  file: string;
  line: number;
  col: number;
}

export interface MatchSet {
  query: string;
  matches: Match[];
  metrics: Record<string, unknown>;
  warnings: string[];
}

export interface Suggestion {
  text: string;
  kind: string;
  evidence: number;
  rank: number;
}

export interface SuggestionList {
  query: string;
  cursor: number;
  context: string;
  replace_from: number;
  suggestions: Suggestion[];
}

export interface Stats {
  T: number;
  k: number;
  m: number;
}

export interface QueryError {
  error: string;
  line?: number;
  col?: number;
  offset?: number;
}

export class ServiceError extends Error {
  constructor(public status: number, public payload: QueryError) {
    super(payload.error);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const ENDPOINTS = ["/query", "/suggest", "/stats", "/source"] as const;
type Endpoint = (typeof ENDPOINTS)[number];

export class ApiClient {
  /** Paths issued so far; lets tests assert the endpoint allowlist holds. */
  readonly issued: string[] = [];

  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(
    endpoint: Endpoint,
    params: Record<string, string>,
    init?: RequestInit,
  ): Promise<Response> {
    const search = new URLSearchParams(params).toString();
    const url = `${this.baseUrl}${endpoint}${search ? `?${search}` : ""}`;
    this.issued.push(endpoint);
    return this.fetchImpl(url, init);
  }

  private async json<T>(response: Response): Promise<T> {
    const body = await response.json();
    if (!response.ok) {
      throw new ServiceError(response.status, body as QueryError);
    }
    return body as T;
  }

  async query(queryText: string, signal?: AbortSignal): Promise<MatchSet> {
    const response = await this.request("/query", {}, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ query: queryText }),
      signal,
    });
    return this.json<MatchSet>(response);
  }

  async suggest(queryText: string, cursor: number): Promise<SuggestionList> {
    const response = await this.request("/suggest", {
      q: queryText,
      cursor: String(cursor),
    });
    return this.json<SuggestionList>(response);
  }

  async stats(): Promise<Stats> {
    return this.json<Stats>(await this.request("/stats", {}));
  }

  async source(file: string): Promise<string> {
    const response = await this.request("/source", { file });
    if (!response.ok) {
      throw new ServiceError(response.status, await response.json());
    }
    return response.text();
  }
}

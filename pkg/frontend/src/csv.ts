/**
 * Parsers for the two CSV interchange formats written by the chemo-limit
 * CLI: the rate-sweep report (`abscissa,metric,value,slope_group` rows with
 * a trailing `# slopes:` comment block) and the energy series (`t,E,D`).
 *
 * Files whose header deviates from the schema are rejected outright.
 */

export class MalformedCsvError extends Error {}

export interface RateRow {
  abscissa: number
  metric: string
  value: number
  slopeGroup: string
}

export interface SlopeFit {
  slope: number
  stderr: number
  npoints: number
}

export interface RateReport {
  rows: RateRow[]
  slopes: Map<string, SlopeFit>
  floor: number | null
  flags: string[]
}

const RATE_HEADER = 'abscissa,metric,value,slope_group'

function parseFinite(token: string, context: string): number {
  const v = Number(token)
  if (!Number.isFinite(v)) {
    throw new MalformedCsvError(`${context}: not a finite number: "${token}"`)
  }
  return v
}

export function parseRateReport(text: string): RateReport {
  const lines = text.split(/\r?\n/)
  if (lines.length === 0 || lines[0].trim() !== RATE_HEADER) {
    throw new MalformedCsvError(
      `rate report must start with "${RATE_HEADER}", got "${lines[0] ?? ''}"`,
    )
  }
  const rows: RateRow[] = []
  const slopes = new Map<string, SlopeFit>()
  let floor: number | null = null
  const flags: string[] = []

  for (const raw of lines.slice(1)) {
    const line = raw.trim()
    if (line === '') continue
    if (line.startsWith('#')) {
      const body = line.replace(/^#\s*/, '')
      if (body === 'slopes:') continue
      if (body.startsWith('floor:')) {
        floor = parseFinite(body.slice('floor:'.length).trim(), 'floor')
      } else if (body.startsWith('paired_floor:') || body.startsWith('failed:')) {
        continue
      } else if (body.startsWith('flag:')) {
        flags.push(body.slice('flag:'.length).trim())
      } else {
        const parts = body.split(',')
        if (parts.length !== 4) {
          throw new MalformedCsvError(`bad slope line: "${line}"`)
        }
        const [metric, slope, stderr, npoints] = parts
        if (slope !== 'nan') {
          slopes.set(metric, {
            slope: parseFinite(slope, 'slope'),
            stderr: parseFinite(stderr, 'stderr'),
            npoints: parseInt(npoints, 10),
          })
        }
      }
      continue
    }
    const parts = line.split(',')
    if (parts.length !== 4) {
      throw new MalformedCsvError(`expected 4 fields, got ${parts.length}: "${line}"`)
    }
    rows.push({
      abscissa: parseFinite(parts[0], 'abscissa'),
      metric: parts[1],
      value: parseFinite(parts[2], 'value'),
      slopeGroup: parts[3],
    })
  }
  return { rows, slopes, floor, flags }
}

/** Group the fittable rows (slope_group other than "aux") by metric. */
export function seriesByMetric(report: RateReport): Map<string, { x: number; y: number }[]> {
  const out = new Map<string, { x: number; y: number }[]>()
  for (const row of report.rows) {
    if (row.slopeGroup === 'aux') continue
    const series = out.get(row.metric) ?? []
    series.push({ x: row.abscissa, y: row.value })
    out.set(row.metric, series)
  }
  return out
}

export interface EnergyRow {
  t: number
  E: number
  D: number
}

const ENERGY_HEADER = 't,E,D'

export function parseEnergySeries(text: string): EnergyRow[] {
  const lines = text.split(/\r?\n/)
  if (lines.length === 0 || lines[0].trim() !== ENERGY_HEADER) {
    throw new MalformedCsvError(
      `energy series must start with "${ENERGY_HEADER}", got "${lines[0] ?? ''}"`,
    )
  }
  const out: EnergyRow[] = []
  for (const raw of lines.slice(1)) {
    const line = raw.trim()
    if (line === '' || line.startsWith('#')) continue
    const parts = line.split(',')
    if (parts.length !== 3) {
      throw new MalformedCsvError(`expected 3 fields, got ${parts.length}: "${line}"`)
    }
    out.push({
      t: parseFinite(parts[0], 't'),
      E: parseFinite(parts[1], 'E'),
      D: parseFinite(parts[2], 'D'),
    })
  }
  return out
}

/** Least-squares slope of log y against log x (fallback when the report
 * carries no fitted slope for a metric). */
export function logLogSlope(points: { x: number; y: number }[]): number | null {
  const usable = points.filter((p) => p.x > 0 && p.y > 0)
  if (usable.length < 2) return null
  const lx = usable.map((p) => Math.log(p.x))
  const ly = usable.map((p) => Math.log(p.y))
  const mx = lx.reduce((a, b) => a + b, 0) / lx.length
  const my = ly.reduce((a, b) => a + b, 0) / ly.length
  let sxx = 0
  let sxy = 0
  for (let i = 0; i < lx.length; i++) {
    sxx += (lx[i] - mx) ** 2
    sxy += (lx[i] - mx) * (ly[i] - my)
  }
  if (sxx === 0) return null
  return sxy / sxx
}

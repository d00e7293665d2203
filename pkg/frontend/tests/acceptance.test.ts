/**
 * Secondary acceptance: the rate figure's annotation agrees with the
 * report's fitted slope to 0.01, and both commands exit 0 on real output
 * from the simulation CLI (shipped in testdata/).
 */

import { mkdtempSync, readFileSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'

import { describe, expect, it } from 'vitest'

import { main } from '../src/cli.js'
import { parseRateReport, seriesByMetric } from '../src/csv.js'

const TESTDATA = join(__dirname, '..', 'testdata')
const RATES_CSV = join(TESTDATA, 'pes_well_rates.csv')
const ENERGY_CSV = join(TESTDATA, 'energy.csv')

describe('acceptance: figure generation from real reports', () => {
  it('plot-rates exits 0 and annotates the fitted slope to 0.01', () => {
    const out = join(mkdtempSync(join(tmpdir(), 'accept-')), 'rates.svg')
    expect(main(['plot-rates', RATES_CSV, out])).toBe(0)

    const report = parseRateReport(readFileSync(RATES_CSV, 'utf8'))
    const expected = report.slopes.get('err_n_LinfL2')!.slope

    // panels are emitted in row order; the density error series comes first
    const metricsInOrder = [...seriesByMetric(report).keys()]
    const svg = readFileSync(out, 'utf8')
    const annotations = [...svg.matchAll(/slope = ([0-9.+-]+)/g)].map((m) => Number(m[1]))
    expect(annotations.length).toBe(metricsInOrder.length)
    const annotated = annotations[metricsInOrder.indexOf('err_n_LinfL2')]
    expect(Math.abs(annotated - expected)).toBeLessThanOrEqual(0.01)
  })

  it('plot-energy exits 0 on the energy series of the identity check run', () => {
    const out = join(mkdtempSync(join(tmpdir(), 'accept-')), 'energy.svg')
    expect(main(['plot-energy', ENERGY_CSV, out])).toBe(0)
    expect(readFileSync(out, 'utf8')).toContain('dissipation D(t)')
  })
})
